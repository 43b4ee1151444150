//! Unit-element DAC reconstruction with mismatched gains.
//!
//! One unit element weighs one quantizer step. The output is recentered on
//! half the bank size, so with `M = L` elements code `k` ideally lands on the
//! quantizer level `(k - L/2) * delta`. With the extra SaDWA element the same
//! code sits half a step lower, and `s(n) = 1` adds one step.

use crate::bank::{ElementBank, QuantizerCode};
use crate::error::{Error, Result};
use crate::io::csv_bytes;
use crate::scalar::Scalar;
use crate::select::{ElementSelector, SelectionMask};

fn check_lengths<T>(mask: &SelectionMask, bank: &ElementBank<T>) -> Result<()>
where
    T: Scalar,
{
    if mask.len() != bank.count() {
        return Err(Error::config(format!(
            "mask covers {} elements but the bank has {}",
            mask.len(),
            bank.count()
        )));
    }
    Ok(())
}

/// `delta * (sum of selected gains - M/2)`.
pub fn dac_convert<T: Scalar>(mask: &SelectionMask, bank: &ElementBank<T>, delta: T) -> Result<T> {
    check_lengths(mask, bank)?;
    let sum = mask.elements().fold(T::zero(), |acc, k| acc + bank.gain(k));
    Ok(delta * (sum - T::from_count(bank.count()) / T::lit(2.0)))
}

/// `delta * sum over selected elements of (g_k - 1)`.
pub fn element_error<T: Scalar>(
    mask: &SelectionMask,
    bank: &ElementBank<T>,
    delta: T,
) -> Result<T> {
    check_lengths(mask, bank)?;
    let nominal = bank.nominal_gain();
    Ok(delta
        * mask
            .elements()
            .fold(T::zero(), |acc, k| acc + (bank.gain(k) - nominal)))
}

/// Per-cycle record of a DAC run. All vectors have one entry per cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct DacOutput<T> {
    pub codes: Vec<QuantizerCode>,
    /// Added bit `s(n)`.
    pub added: Vec<u8>,
    /// Pointer before each selection, `tau(n)`.
    pub pointer_trace: Vec<usize>,
    pub masks: Vec<SelectionMask>,
    /// Analog output `v(n)`.
    pub v: Vec<T>,
    /// Mismatch error `e(n)`.
    pub e: Vec<T>,
}

impl<T: Scalar> DacOutput<T> {
    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    /// CSV with columns `n, code, s, tau, v, e`.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        csv_bytes(
            &["n", "code", "s", "tau", "v", "e"],
            (0..self.len()).map(|n| {
                [
                    n.to_string(),
                    self.codes[n].0.to_string(),
                    self.added[n].to_string(),
                    self.pointer_trace[n].to_string(),
                    self.v[n].to_string(),
                    self.e[n].to_string(),
                ]
            }),
        )
    }

    /// CSV with columns `n, code, s, pointer_before, mask`; the mask is a
    /// bitstring with element 1 first.
    pub fn selection_csv(&self) -> Result<Vec<u8>> {
        csv_bytes(
            &["n", "code", "s", "pointer_before", "mask"],
            (0..self.len()).map(|n| {
                [
                    n.to_string(),
                    self.codes[n].0.to_string(),
                    self.added[n].to_string(),
                    self.pointer_trace[n].to_string(),
                    self.masks[n].to_bitstring(),
                ]
            }),
        )
    }
}

/// Drives `selector` with `codes` and reconstructs every cycle.
pub fn run_dac<T: Scalar, S: ElementSelector + ?Sized>(
    codes: &[QuantizerCode],
    selector: &mut S,
    bank: &ElementBank<T>,
    delta: T,
) -> Result<DacOutput<T>> {
    if selector.modulus() != bank.count() {
        return Err(Error::config(format!(
            "selector rotates over {} elements but the bank has {}",
            selector.modulus(),
            bank.count()
        )));
    }
    let n = codes.len();
    let mut out = DacOutput {
        codes: codes.to_vec(),
        added: Vec::with_capacity(n),
        pointer_trace: Vec::with_capacity(n),
        masks: Vec::with_capacity(n),
        v: Vec::with_capacity(n),
        e: Vec::with_capacity(n),
    };
    for (cycle, &code) in codes.iter().enumerate() {
        let sel = selector.select(code).map_err(|e| e.at_cycle(cycle))?;
        out.v.push(dac_convert(&sel.mask, bank, delta)?);
        out.e.push(element_error(&sel.mask, bank, delta)?);
        out.added.push(sel.added);
        out.pointer_trace.push(sel.pointer_before);
        out.masks.push(sel.mask);
    }
    Ok(out)
}
