//! Unit-element selection: thermometer, data weighted averaging (DWA) and
//! added-sequence DWA (SaDWA).
//!
//! Elements are numbered `1..=M`. DWA fires `y` consecutive elements starting
//! at the pointer `p`, wrapping past `M`, then moves the pointer to the first
//! unused element. SaDWA feeds `y + s(n)` to the same rotation over one extra
//! element, where `s(n)` is a binary sequence.

use std::fmt::Display;

use num_integer::Integer;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bank::QuantizerCode;
use crate::error::{Error, Result};

/// Circular index wrap onto `1..=m`: `k - m * floor((k - 1) / m)`.
pub fn wrap_rl<I: Integer + Copy + Display>(k: I, m: I) -> Result<I> {
    if m < I::one() {
        return Err(Error::config(format!(
            "modulus must be at least 1, got {m}"
        )));
    }
    if k < I::one() {
        return Err(Error::config(format!("index must be at least 1, got {k}")));
    }
    Ok(k - m * (k - I::one()).div_floor(&m))
}

#[inline]
fn wrap(k: usize, m: usize) -> usize {
    k - m * ((k - 1) / m)
}

/// Period of the pointer orbit under a constant code `y` over `m` elements.
pub fn pointer_period(y: usize, m: usize) -> usize {
    m / y.gcd(&m)
}

/// Smallest period of `trace`, checked over the whole slice.
pub fn detect_period(trace: &[usize]) -> Option<usize> {
    (1..=trace.len() / 2).find(|&p| trace.iter().skip(p).zip(trace).all(|(a, b)| a == b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DwaState {
    pointer: usize,
    modulus: usize,
}

impl DwaState {
    pub fn new(pointer: usize, modulus: usize) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::config("selector needs at least one element"));
        }
        if !(1..=modulus).contains(&pointer) {
            return Err(Error::config(format!(
                "pointer {pointer} outside 1..={modulus}"
            )));
        }
        Ok(Self { pointer, modulus })
    }

    pub fn pointer(&self) -> usize {
        self.pointer
    }

    pub fn modulus(&self) -> usize {
        self.modulus
    }
}

/// Elements fired in one cycle; index 0 is element 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SelectionMask {
    bits: Vec<bool>,
}

impl SelectionMask {
    pub fn empty(len: usize) -> Self {
        Self {
            bits: vec![false; len],
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Marks `count` elements starting at `start`, wrapping past the end.
    pub fn circular_run(len: usize, start: usize, count: usize) -> Self {
        let mut mask = Self::empty(len);
        for j in 0..count {
            mask.bits[wrap(start + j, len) - 1] = true;
        }
        mask
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn popcount(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn contains(&self, element: usize) -> bool {
        self.bits[element - 1]
    }

    /// Fired element numbers, 1-based, ascending.
    pub fn elements(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i + 1))
    }

    /// `1` for fired, `0` otherwise, element 1 first.
    pub fn to_bitstring(&self) -> String {
        self.bits
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect()
    }

    /// Start of the single circular run of fired elements, if the mask is
    /// one non-empty circular run.
    pub fn run_start(&self) -> Option<usize> {
        let m = self.len();
        let count = self.popcount();
        if count == 0 {
            return None;
        }
        if count == m {
            return Some(1);
        }
        let starts: Vec<usize> = (1..=m)
            .filter(|&k| self.bits[k - 1] && !self.bits[wrap(k + m - 1, m) - 1])
            .collect();
        match starts.as_slice() {
            [s] => Some(*s),
            _ => None,
        }
    }
}

/// One DWA rotation step.
pub fn dwa_select(state: DwaState, y: QuantizerCode) -> Result<(SelectionMask, DwaState)> {
    let m = state.modulus;
    if y.0 > m {
        return Err(Error::CodeOutOfRange {
            code: y.0,
            modulus: m,
        });
    }
    let mask = SelectionMask::circular_run(m, state.pointer, y.0);
    let next = DwaState {
        pointer: wrap(state.pointer + y.0, m),
        modulus: m,
    };
    Ok((mask, next))
}

/// DWA step on the augmented code `y + s`.
pub fn sadwa_select(state: DwaState, y: QuantizerCode, s: u8) -> Result<(SelectionMask, DwaState)> {
    if s > 1 {
        return Err(Error::config(format!(
            "added sequence must be binary, got {s}"
        )));
    }
    dwa_select(state, QuantizerCode(y.0 + s as usize))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AddedKind {
    #[default]
    ConstantZero,
    ConstantOne,
    /// `n mod 2`
    Periodic01,
    SeededRandom,
}

impl std::str::FromStr for AddedKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "constant_zero" => Ok(AddedKind::ConstantZero),
            "constant_one" => Ok(AddedKind::ConstantOne),
            "periodic_01" => Ok(AddedKind::Periodic01),
            "seeded_random" => Ok(AddedKind::SeededRandom),
            other => Err(format!("unknown added sequence `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct AddedSequenceSpec {
    pub kind: AddedKind,
    #[serde(default)]
    pub seed: u64,
}

impl AddedSequenceSpec {
    pub fn new(kind: AddedKind, seed: u64) -> Self {
        Self { kind, seed }
    }

    pub fn stream(&self) -> AddedSequence {
        AddedSequence::new(*self)
    }
}

/// `s(n)` by random access. Random bits come from the ChaCha8 keystream:
/// bit `n` is bit `n % 32` of word `n / 32`.
pub fn added_sequence(n: u64, spec: &AddedSequenceSpec) -> u8 {
    match spec.kind {
        AddedKind::ConstantZero => 0,
        AddedKind::ConstantOne => 1,
        AddedKind::Periodic01 => (n % 2) as u8,
        AddedKind::SeededRandom => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_word_pos((n / 32) as u128);
            ((rng.next_u32() >> (n % 32)) & 1) as u8
        }
    }
}

/// Sequential `s(n)` generator, equal to [`added_sequence`] for `n = 0, 1, ...`.
#[derive(Debug, Clone)]
pub struct AddedSequence {
    spec: AddedSequenceSpec,
    n: u64,
    rng: ChaCha8Rng,
    word: u32,
}

impl AddedSequence {
    pub fn new(spec: AddedSequenceSpec) -> Self {
        Self {
            spec,
            n: 0,
            rng: ChaCha8Rng::seed_from_u64(spec.seed),
            word: 0,
        }
    }

    pub fn spec(&self) -> &AddedSequenceSpec {
        &self.spec
    }
}

impl Iterator for AddedSequence {
    type Item = u8;

    fn next(&mut self) -> Option<u8> {
        let n = self.n;
        self.n += 1;
        Some(match self.spec.kind {
            AddedKind::SeededRandom => {
                if n.is_multiple_of(32) {
                    self.word = self.rng.next_u32();
                }
                ((self.word >> (n % 32)) & 1) as u8
            }
            _ => added_sequence(n, &self.spec),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    /// Elements `1..=y`, always.
    Thermometer,
    Dwa,
    Sadwa,
}

impl std::str::FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "thermometer" => Ok(StrategyKind::Thermometer),
            "dwa" => Ok(StrategyKind::Dwa),
            "sadwa" => Ok(StrategyKind::Sadwa),
            other => Err(format!("unknown strategy `{other}`")),
        }
    }
}

/// What a selector did in one cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    pub mask: SelectionMask,
    /// Pointer before the update, `tau(n)`. Always 1 for thermometer coding.
    pub pointer_before: usize,
    /// Added bit `s(n)`; 0 unless SaDWA.
    pub added: u8,
}

pub trait ElementSelector {
    fn modulus(&self) -> usize;

    fn select(&mut self, code: QuantizerCode) -> Result<Selection>;
}

#[derive(Debug, Clone)]
pub struct Thermometer {
    modulus: usize,
}

impl Thermometer {
    pub fn new(modulus: usize) -> Result<Self> {
        DwaState::new(1, modulus)?;
        Ok(Self { modulus })
    }
}

impl ElementSelector for Thermometer {
    fn modulus(&self) -> usize {
        self.modulus
    }

    fn select(&mut self, code: QuantizerCode) -> Result<Selection> {
        if code.0 > self.modulus {
            return Err(Error::CodeOutOfRange {
                code: code.0,
                modulus: self.modulus,
            });
        }
        Ok(Selection {
            mask: SelectionMask::circular_run(self.modulus, 1, code.0),
            pointer_before: 1,
            added: 0,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Dwa {
    state: DwaState,
}

impl Dwa {
    pub fn new(state: DwaState) -> Self {
        Self { state }
    }

    pub fn state(&self) -> DwaState {
        self.state
    }
}

impl ElementSelector for Dwa {
    fn modulus(&self) -> usize {
        self.state.modulus
    }

    fn select(&mut self, code: QuantizerCode) -> Result<Selection> {
        let pointer_before = self.state.pointer;
        let (mask, next) = dwa_select(self.state, code)?;
        self.state = next;
        Ok(Selection {
            mask,
            pointer_before,
            added: 0,
        })
    }
}

#[derive(Debug, Clone)]
pub struct SaDwa {
    state: DwaState,
    added: AddedSequence,
}

impl SaDwa {
    pub fn new(state: DwaState, added: AddedSequenceSpec) -> Self {
        Self {
            state,
            added: added.stream(),
        }
    }

    pub fn state(&self) -> DwaState {
        self.state
    }
}

impl ElementSelector for SaDwa {
    fn modulus(&self) -> usize {
        self.state.modulus
    }

    fn select(&mut self, code: QuantizerCode) -> Result<Selection> {
        let pointer_before = self.state.pointer;
        let s = self.added.next().unwrap_or(0);
        let (mask, next) = sadwa_select(self.state, code, s)?;
        self.state = next;
        Ok(Selection {
            mask,
            pointer_before,
            added: s,
        })
    }
}

/// Any of the shipped strategies, chosen at run time.
#[derive(Debug, Clone)]
pub enum Selector {
    Thermometer(Thermometer),
    Dwa(Dwa),
    SaDwa(SaDwa),
}

impl Selector {
    pub fn build(
        kind: StrategyKind,
        modulus: usize,
        initial_pointer: usize,
        added: AddedSequenceSpec,
    ) -> Result<Self> {
        let state = DwaState::new(initial_pointer, modulus)?;
        Ok(match kind {
            StrategyKind::Thermometer => Selector::Thermometer(Thermometer::new(modulus)?),
            StrategyKind::Dwa => Selector::Dwa(Dwa::new(state)),
            StrategyKind::Sadwa => Selector::SaDwa(SaDwa::new(state, added)),
        })
    }
}

impl ElementSelector for Selector {
    fn modulus(&self) -> usize {
        match self {
            Selector::Thermometer(s) => s.modulus(),
            Selector::Dwa(s) => s.modulus(),
            Selector::SaDwa(s) => s.modulus(),
        }
    }

    fn select(&mut self, code: QuantizerCode) -> Result<Selection> {
        match self {
            Selector::Thermometer(s) => s.select(code),
            Selector::Dwa(s) => s.select(code),
            Selector::SaDwa(s) => s.select(code),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn trace(state: DwaState, codes: impl IntoIterator<Item = usize>, s: u8) -> Vec<usize> {
        let mut st = state;
        codes
            .into_iter()
            .map(|y| {
                let p = st.pointer();
                st = sadwa_select(st, QuantizerCode(y), s).unwrap().1;
                p
            })
            .collect()
    }

    // One element at a time, round robin.
    fn walker(p: usize, y: usize, m: usize) -> (Vec<bool>, usize) {
        let mut bits = vec![false; m];
        let mut idx = p - 1;
        for _ in 0..y {
            bits[idx] = true;
            idx = (idx + 1) % m;
        }
        (bits, idx + 1)
    }

    #[test]
    fn wrap_examples() {
        assert_eq!(wrap_rl(8, 7).unwrap(), 1);
        assert_eq!(wrap_rl(7, 7).unwrap(), 7);
        assert_eq!(wrap_rl(15i64, 7).unwrap(), 1);
        assert_eq!(wrap_rl(1u8, 1).unwrap(), 1);
        assert!(wrap_rl(0, 7).is_err());
        assert!(wrap_rl(-3i32, 7).is_err());
        assert!(wrap_rl(3, 0).is_err());
    }

    #[test]
    fn wrap_matches_mod_oracle() {
        for m in 1..=16usize {
            for k in 1..=1000usize {
                assert_eq!(wrap_rl(k, m).unwrap(), (k - 1) % m + 1);
            }
        }
    }

    #[test]
    fn alternating_codes_cycle_on_seven_elements() {
        let st = DwaState::new(1, 7).unwrap();
        let t = trace(st, [3, 4].into_iter().cycle().take(100), 0);
        assert!(t.chunks(2).all(|c| c == [1, 4]));
    }

    #[test]
    fn constant_four_cycles_on_eight_elements() {
        let st = DwaState::new(2, 8).unwrap();
        let t = trace(st, std::iter::repeat_n(4, 100), 0);
        assert!(t.chunks(2).all(|c| c == [2, 6]));
    }

    #[test]
    fn wrapped_selection() {
        let st = DwaState::new(5, 7).unwrap();
        let (mask, next) = dwa_select(st, QuantizerCode(4)).unwrap();
        assert_eq!(mask.elements().collect::<Vec<_>>(), vec![1, 5, 6, 7]);
        assert_eq!(next.pointer(), 2);
        assert_eq!(mask.run_start(), Some(5));
        assert_eq!(walker(5, 4, 7), (mask.bits().to_vec(), 2));
    }

    #[test]
    fn zero_code_keeps_pointer() {
        for m in 1..=9 {
            for p in 1..=m {
                let st = DwaState::new(p, m).unwrap();
                let (mask, next) = dwa_select(st, QuantizerCode(0)).unwrap();
                assert_eq!(mask.popcount(), 0);
                assert_eq!(next, st);
                assert_eq!(mask.run_start(), None);
            }
        }
    }

    #[test]
    fn rejects_oversized_codes() {
        let st = DwaState::new(1, 7).unwrap();
        assert!(matches!(
            dwa_select(st, QuantizerCode(8)),
            Err(Error::CodeOutOfRange {
                code: 8,
                modulus: 7
            })
        ));
        let st = DwaState::new(1, 8).unwrap();
        assert!(sadwa_select(st, QuantizerCode(8), 1).is_err());
        assert!(sadwa_select(st, QuantizerCode(7), 1).is_ok());
        assert!(sadwa_select(st, QuantizerCode(1), 2).is_err());
        assert!(DwaState::new(0, 8).is_err());
        assert!(DwaState::new(9, 8).is_err());
        assert!(DwaState::new(1, 0).is_err());
    }

    #[test]
    fn extra_element_breaks_the_period_two_cycle() {
        let st = DwaState::new(1, 8).unwrap();
        let t = trace(st, [3, 4].into_iter().cycle().take(8), 0);
        assert_eq!(t, vec![1, 4, 8, 3, 7, 2, 6, 1]);
    }

    #[test]
    fn constant_one_sequence_visits_every_element() {
        let st = DwaState::new(1, 8).unwrap();
        let t = trace(st, std::iter::repeat_n(4, 9), 1);
        assert_eq!(t, vec![1, 6, 3, 8, 5, 2, 7, 4, 1]);
    }

    #[test]
    fn sadwa_without_extra_element_is_dwa() {
        let st = DwaState::new(3, 7).unwrap();
        for y in 0..=7 {
            assert_eq!(
                sadwa_select(st, QuantizerCode(y), 0).unwrap(),
                dwa_select(st, QuantizerCode(y)).unwrap()
            );
        }
    }

    #[test]
    fn added_sequence_kinds() {
        let one = AddedSequenceSpec::new(AddedKind::ConstantOne, 0);
        assert!((0..100).all(|n| added_sequence(n, &one) == 1));
        let zero = AddedSequenceSpec::new(AddedKind::ConstantZero, 0);
        assert!((0..100).all(|n| added_sequence(n, &zero) == 0));
        let per = AddedSequenceSpec::new(AddedKind::Periodic01, 0);
        assert_eq!(
            (0..4).map(|n| added_sequence(n, &per)).collect::<Vec<_>>(),
            vec![0, 1, 0, 1]
        );
    }

    #[test]
    fn random_sequence_is_seeded_and_balanced() {
        let a = AddedSequenceSpec::new(AddedKind::SeededRandom, 17);
        let b = AddedSequenceSpec::new(AddedKind::SeededRandom, 18);
        let sa: Vec<u8> = a.stream().take(10_000).collect();
        assert_eq!(sa, a.stream().take(10_000).collect::<Vec<_>>());
        assert_ne!(sa, b.stream().take(10_000).collect::<Vec<_>>());
        let ones = sa.iter().filter(|&&s| s == 1).count();
        // binomial(1e4, 1/2): 4 sigma = 200
        assert!((ones as i64 - 5000).abs() < 200, "{ones}");
        for (n, &s) in sa.iter().enumerate().step_by(97) {
            assert_eq!(added_sequence(n as u64, &a), s);
        }
        assert!(sa.iter().all(|&s| s <= 1));
    }

    #[test]
    fn thermometer_always_starts_at_one() {
        let mut t = Thermometer::new(7).unwrap();
        for y in [3, 0, 7, 5] {
            let sel = t.select(QuantizerCode(y)).unwrap();
            assert_eq!(
                sel.mask.elements().collect::<Vec<_>>(),
                (1..=y).collect::<Vec<_>>()
            );
            assert_eq!(sel.pointer_before, 1);
        }
        assert!(t.select(QuantizerCode(8)).is_err());
    }

    #[test]
    fn exhaustive_walker_equivalence() {
        for m in 1..=10 {
            for p in 1..=m {
                for y in 0..=m {
                    let (mask, next) =
                        dwa_select(DwaState::new(p, m).unwrap(), QuantizerCode(y)).unwrap();
                    let (bits, np) = walker(p, y, m);
                    assert_eq!(mask.bits(), bits.as_slice(), "m={m} p={p} y={y}");
                    assert_eq!(next.pointer(), np);
                }
            }
        }
    }

    #[test]
    fn constant_code_period() {
        for m in 1..=16 {
            for y in 0..=m {
                let t = trace(
                    DwaState::new(1, m).unwrap(),
                    std::iter::repeat_n(y, 4 * m),
                    0,
                );
                assert_eq!(detect_period(&t), Some(pointer_period(y, m)), "m={m} y={y}");
            }
        }
        assert_eq!(pointer_period(4, 8), 2);
        assert_eq!(pointer_period(5, 8), 8);
        assert_eq!(pointer_period(3, 8), 8);
    }

    proptest! {
        #[test]
        fn wrap_matches_mod(k in 1i64..1_000_000, m in 1i64..64) {
            prop_assert_eq!(wrap_rl(k, m).unwrap(), (k - 1).rem_euclid(m) + 1);
        }

        #[test]
        fn masks_are_one_contiguous_run(m in 1usize..17, p0 in 0usize..16,
                                        codes in proptest::collection::vec(0usize..17, 1..200)) {
            let mut st = DwaState::new(p0 % m + 1, m).unwrap();
            for y in codes {
                let y = y % (m + 1);
                let before = st.pointer();
                let (mask, next) = dwa_select(st, QuantizerCode(y)).unwrap();
                prop_assert_eq!(mask.popcount(), y);
                if y > 0 {
                    prop_assert_eq!(mask.run_start(), Some(if y == m { 1 } else { before }));
                }
                prop_assert!((1..=m).contains(&next.pointer()));
                prop_assert_eq!((before + y - next.pointer()) % m, 0);
                st = next;
            }
        }

        #[test]
        fn usage_stays_balanced(m in 2usize..17, seed in any::<u64>()) {
            use rand::Rng;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut st = DwaState::new(1, m).unwrap();
            let mut usage = vec![0u64; m];
            let mut total = 0u64;
            for _ in 0..2000 {
                let y = rng.random_range(0..=m);
                let (mask, next) = dwa_select(st, QuantizerCode(y)).unwrap();
                for e in mask.elements() { usage[e - 1] += 1; }
                total += y as u64;
                st = next;
                let lo = total / m as u64;
                let hi = total.div_ceil(m as u64);
                prop_assert!(usage.iter().all(|&u| u == lo || u == hi));
            }
        }
    }
}
