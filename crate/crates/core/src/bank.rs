//! Unit-element gain banks and mismatch generation.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// The measured gain set of the 8-element reference DAC.
pub const REFERENCE_GAINS: [f64; 8] = [
    1.0109, 1.0141, 0.9871, 1.0143, 1.0046, 0.9861, 0.9923, 1.0016,
];

/// Named banks that can be referenced from scenarios and the CLI.
pub const BANK_PRESETS: &[(&str, &str)] = &[
    ("reference-8", "reference 8-element gain set (L+1 DAC)"),
    ("reference-7", "first 7 gains of the reference set (L DAC)"),
    ("ideal-7", "7 perfectly matched elements"),
    ("ideal-8", "8 perfectly matched elements"),
];

/// DAC input code: the number of unit elements to fire in one cycle.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct QuantizerCode(pub usize);

impl QuantizerCode {
    pub fn value(self) -> usize {
        self.0
    }
}

impl From<usize> for QuantizerCode {
    fn from(v: usize) -> Self {
        QuantizerCode(v)
    }
}

/// Gains of the `M` unit elements of a DAC, as multiples of the nominal
/// element weight.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementBank<T> {
    gains: Vec<T>,
    nominal_gain: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BankStatistics<T> {
    pub mean: T,
    /// Sample standard deviation (n - 1 denominator).
    pub sample_std: T,
    /// Largest `|g_k - 1|`.
    pub max_abs_error: T,
}

impl<T: Scalar> ElementBank<T> {
    pub fn new(gains: Vec<T>) -> Result<Self> {
        if gains.is_empty() {
            return Err(Error::config("element bank needs at least one element"));
        }
        if let Some((k, g)) = gains
            .iter()
            .enumerate()
            .find(|(_, g)| !g.is_finite() || **g <= T::zero())
        {
            return Err(Error::config(format!(
                "element {} has invalid gain {g}",
                k + 1
            )));
        }
        Ok(Self {
            gains,
            nominal_gain: T::one(),
        })
    }

    pub fn ideal(count: usize) -> Result<Self> {
        Self::new(vec![T::one(); count])
    }

    pub fn from_f64(gains: &[f64]) -> Result<Self> {
        Self::new(gains.iter().map(|&g| T::lit(g)).collect())
    }

    /// Resolves one of [`BANK_PRESETS`].
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "reference-8" => Self::from_f64(&REFERENCE_GAINS),
            "reference-7" => Self::from_f64(&REFERENCE_GAINS[..7]),
            "ideal-7" => Self::ideal(7),
            "ideal-8" => Self::ideal(8),
            other => Err(Error::config(format!("unknown bank preset `{other}`"))),
        }
    }

    pub fn count(&self) -> usize {
        self.gains.len()
    }

    pub fn gains(&self) -> &[T] {
        &self.gains
    }

    pub fn nominal_gain(&self) -> T {
        self.nominal_gain
    }

    /// Gain of element `k`, 1-based.
    pub fn gain(&self, k: usize) -> T {
        self.gains[k - 1]
    }

    /// Bank made of the first `count` elements.
    pub fn truncated(&self, count: usize) -> Result<Self> {
        if count > self.count() {
            return Err(Error::config(format!(
                "cannot take {count} elements from a bank of {}",
                self.count()
            )));
        }
        Self::new(self.gains[..count].to_vec())
    }

    pub fn is_ideal(&self) -> bool {
        self.gains.iter().all(|&g| g == self.nominal_gain)
    }

    pub fn statistics(&self) -> BankStatistics<T> {
        bank_statistics(self)
    }

    /// One decimal gain per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for g in &self.gains {
            let _ = writeln!(out, "{g}");
        }
        out
    }

    /// Parses the one-gain-per-line format. Blank lines and `#` comments are
    /// skipped.
    pub fn from_text(text: &str) -> std::result::Result<Self, String> {
        let mut gains = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let g = line
                .parse::<T>()
                .map_err(|_| format!("line {}: `{line}` is not a number", lineno + 1))?;
            gains.push(g);
        }
        Self::new(gains).map_err(|e| e.to_string())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text).map_err(|message| Error::Parse {
            path: path.to_path_buf(),
            message,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::io::write_atomic(path.as_ref(), self.to_text().as_bytes())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    #[default]
    Uniform,
    Normal,
}

impl std::str::FromStr for Distribution {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "uniform" => Ok(Distribution::Uniform),
            "normal" => Ok(Distribution::Normal),
            other => Err(format!("unknown distribution `{other}`")),
        }
    }
}

/// Random mismatch model: relative spread `sigma` around a nominal gain of 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MismatchSpec {
    pub sigma: f64,
    #[serde(default)]
    pub distribution: Distribution,
    pub seed: u64,
}

/// Draws `count` i.i.d. gains around 1.
///
/// Uniform gains are spread over `[1 - sqrt(3) sigma, 1 + sqrt(3) sigma]` so
/// the population standard deviation is `sigma`. Normal draws that land at or
/// below zero are redrawn.
pub fn generate_element_bank<T: Scalar>(
    count: usize,
    spec: &MismatchSpec,
) -> Result<ElementBank<T>> {
    if count == 0 {
        return Err(Error::config("element count must be at least 1"));
    }
    if !(spec.sigma >= 0.0) || !spec.sigma.is_finite() {
        return Err(Error::config(format!(
            "mismatch sigma must be finite and non-negative, got {}",
            spec.sigma
        )));
    }
    if spec.sigma == 0.0 {
        return ElementBank::ideal(count);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let gains = match spec.distribution {
        Distribution::Uniform => {
            let half_width = 3f64.sqrt() * spec.sigma;
            if half_width >= 1.0 {
                return Err(Error::config(format!(
                    "uniform mismatch sigma {} allows non-positive gains",
                    spec.sigma
                )));
            }
            (0..count)
                .map(|_| rng.random_range(1.0 - half_width..=1.0 + half_width))
                .collect::<Vec<f64>>()
        }
        Distribution::Normal => {
            let normal = Normal::new(1.0, spec.sigma).map_err(|e| Error::config(e.to_string()))?;
            (0..count)
                .map(|_| loop {
                    let g = normal.sample(&mut rng);
                    if g > 0.0 {
                        break g;
                    }
                })
                .collect()
        }
    };
    ElementBank::from_f64(&gains)
}

pub fn bank_statistics<T: Scalar>(bank: &ElementBank<T>) -> BankStatistics<T> {
    let n = T::from_count(bank.count());
    let mean = bank.gains.iter().fold(T::zero(), |acc, &g| acc + g) / n;
    let sample_std = if bank.count() > 1 {
        let ss = bank
            .gains
            .iter()
            .fold(T::zero(), |acc, &g| acc + (g - mean) * (g - mean));
        (ss / (n - T::one())).sqrt()
    } else {
        T::zero()
    };
    let max_abs_error = bank
        .gains
        .iter()
        .fold(T::zero(), |acc, &g| acc.max((g - bank.nominal_gain).abs()));
    BankStatistics {
        mean,
        sample_std,
        max_abs_error,
    }
}
