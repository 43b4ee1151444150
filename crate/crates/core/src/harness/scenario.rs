//! Scenario files: everything needed to reproduce one simulation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bank::{generate_element_bank, Distribution, ElementBank, MismatchSpec};
use crate::error::{Error, Result};
use crate::modulator::{InputSpec, ModulatorConfig};
use crate::scalar::Scalar;
use crate::select::{AddedKind, AddedSequenceSpec, StrategyKind};
use crate::spectral::{band_edge_hz, Window, DEFAULT_FLOOR_HALF_WIDTH, DEFAULT_TONE_THRESHOLD_DB};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    /// Added sequence `s(n)`; only used by SaDWA.
    #[serde(default)]
    pub added: AddedKind,
    #[serde(default = "one")]
    pub initial_pointer: usize,
}

fn one() -> usize {
    1
}

/// Where the element gains come from. Exactly one of `preset`, `file`,
/// `gains` or `sigma` must be set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BankConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gains: Option<Vec<f64>>,
    /// Random mismatch: relative spread.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<Distribution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl BankConfig {
    pub fn preset(name: &str) -> Self {
        Self {
            preset: Some(name.into()),
            ..Default::default()
        }
    }

    pub fn mismatch(spec: MismatchSpec) -> Self {
        Self {
            sigma: Some(spec.sigma),
            distribution: Some(spec.distribution),
            seed: Some(spec.seed),
            ..Default::default()
        }
    }

    pub fn gains(gains: Vec<f64>) -> Self {
        Self {
            gains: Some(gains),
            ..Default::default()
        }
    }

    /// Builds the bank; generated banks get `count` elements.
    pub fn resolve<T: Scalar>(&self, count: usize) -> Result<ElementBank<T>> {
        let sources = [
            self.preset.is_some(),
            self.file.is_some(),
            self.gains.is_some(),
            self.sigma.is_some(),
        ];
        if sources.iter().filter(|&&s| s).count() != 1 {
            return Err(Error::config(
                "bank needs exactly one of `preset`, `file`, `gains` or `sigma`",
            ));
        }
        if self.sigma.is_none() && (self.seed.is_some() || self.distribution.is_some()) {
            return Err(Error::config(
                "bank `seed`/`distribution` only apply with `sigma`",
            ));
        }
        if let Some(name) = &self.preset {
            ElementBank::preset(name)
        } else if let Some(path) = &self.file {
            ElementBank::load(path)
        } else if let Some(gains) = &self.gains {
            ElementBank::from_f64(gains)
        } else {
            let spec = MismatchSpec {
                sigma: self.sigma.unwrap_or_default(),
                distribution: self.distribution.unwrap_or_default(),
                seed: self.seed.unwrap_or_default(),
            };
            generate_element_bank(count, &spec)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub n_fft: usize,
    #[serde(default)]
    pub window: Window,
    #[serde(default)]
    pub overlap: f64,
    pub osr: f64,
    /// Leading samples dropped before spectral analysis.
    pub transient_discard: usize,
    /// Move the input frequency onto the nearest FFT bin.
    #[serde(default = "yes")]
    pub snap_to_bin: bool,
    #[serde(default = "default_threshold")]
    pub tone_threshold_db: f64,
    #[serde(default = "default_floor_width")]
    pub tone_floor_half_width: usize,
}

fn yes() -> bool {
    true
}

fn default_threshold() -> f64 {
    DEFAULT_TONE_THRESHOLD_DB
}

fn default_floor_width() -> usize {
    DEFAULT_FLOOR_HALF_WIDTH
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            n_fft: 1 << 16,
            window: Window::Hann,
            overlap: 0.0,
            osr: 128.0,
            transient_discard: 2048,
            snap_to_bin: true,
            tone_threshold_db: DEFAULT_TONE_THRESHOLD_DB,
            tone_floor_half_width: DEFAULT_FLOOR_HALF_WIDTH,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub amplitudes_dbfs: Vec<f64>,
}

/// A complete, serializable experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Seed of the random added sequence.
    #[serde(default)]
    pub seed: u64,
    pub input: InputSpec,
    #[serde(default)]
    pub modulator: ModulatorConfig,
    pub strategy: StrategyConfig,
    pub bank: BankConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

impl Scenario {
    pub fn from_toml(text: &str) -> std::result::Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(format!("cannot serialize scenario: {e}")))
    }

    /// Reads a scenario file. A relative bank `file` is taken relative to the
    /// scenario's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut s = Self::from_toml(&text).map_err(|message| Error::Parse {
            path: path.to_path_buf(),
            message,
        })?;
        if let (Some(file), Some(dir)) = (&s.bank.file, path.parent()) {
            if file.is_relative() {
                s.bank.file = Some(dir.join(file));
            }
        }
        Ok(s)
    }

    /// Number of elements the selector rotates over.
    pub fn element_count(&self) -> usize {
        let l = self.modulator.max_code();
        match self.strategy.kind {
            StrategyKind::Sadwa => l + 1,
            _ => l,
        }
    }

    pub fn added_sequence(&self) -> AddedSequenceSpec {
        let kind = match self.strategy.kind {
            StrategyKind::Sadwa => self.strategy.added,
            _ => AddedKind::ConstantZero,
        };
        AddedSequenceSpec::new(kind, self.seed)
    }

    pub fn band_edge_hz(&self) -> f64 {
        band_edge_hz(self.input.sample_rate_hz, self.analysis.osr)
    }

    /// Input frequency after optional snapping to the analysis grid.
    pub fn signal_freq_hz(&self) -> f64 {
        let f = self.input.freq_hz;
        if self.analysis.snap_to_bin {
            let bw = self.input.sample_rate_hz / self.analysis.n_fft as f64;
            (f / bw).round().max(1.0) * bw
        } else {
            f
        }
    }

    pub fn bank<T: Scalar>(&self) -> Result<ElementBank<T>> {
        self.bank.resolve(self.element_count())
    }

    /// Cross-field checks, done before anything is simulated.
    pub fn validate(&self) -> Result<()> {
        self.modulator.validate()?;
        self.input.validate()?;
        let a = &self.analysis;
        if a.n_fft < 2 || !a.n_fft.is_power_of_two() {
            return Err(Error::config(format!(
                "n_fft must be a power of two, got {}",
                a.n_fft
            )));
        }
        if self.input.n_samples < a.transient_discard + a.n_fft {
            return Err(Error::config(format!(
                "n_samples {} leaves fewer than n_fft = {} samples after discarding {}",
                self.input.n_samples, a.n_fft, a.transient_discard
            )));
        }
        if !(a.osr >= 1.0) {
            return Err(Error::config(format!(
                "osr must be at least 1, got {}",
                a.osr
            )));
        }
        if !(a.tone_threshold_db > 0.0) {
            return Err(Error::config("tone threshold must be positive"));
        }
        let f = self.signal_freq_hz();
        if !(f < self.band_edge_hz()) {
            return Err(Error::config(format!(
                "input at {f} Hz lies outside the {} Hz signal band",
                self.band_edge_hz()
            )));
        }
        if f >= self.input.sample_rate_hz / 2.0 {
            return Err(Error::config("snapped input frequency reaches Nyquist"));
        }
        let m = self.element_count();
        if !(1..=m).contains(&self.strategy.initial_pointer) {
            return Err(Error::config(format!(
                "initial pointer {} outside 1..={m}",
                self.strategy.initial_pointer
            )));
        }
        let bank: ElementBank<f64> = self.bank()?;
        if bank.count() != m {
            let what = match self.strategy.kind {
                StrategyKind::Sadwa => "SaDWA needs L+1",
                _ => "this strategy needs L",
            };
            return Err(Error::config(format!(
                "bank has {} elements; {what} = {m} for a {}-bit quantizer",
                bank.count(),
                self.modulator.bits
            )));
        }
        if self.strategy.kind != StrategyKind::Sadwa
            && self.strategy.added != AddedKind::ConstantZero
        {
            return Err(Error::config("an added sequence needs the sadwa strategy"));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.amplitudes_dbfs.is_empty() {
                return Err(Error::config("sweep needs at least one amplitude"));
            }
            if sweep.amplitudes_dbfs.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::config(
                    "sweep amplitudes must be strictly increasing",
                ));
            }
        }
        Ok(())
    }

    /// Validated copy with the input frequency snapped and the bank inlined,
    /// so it reproduces the run without any external file.
    pub fn resolved(&self) -> Result<Self> {
        self.validate()?;
        let mut s = self.clone();
        s.input.freq_hz = self.signal_freq_hz();
        let bank: ElementBank<f64> = self.bank()?;
        s.bank = BankConfig::gains(bank.gains().to_vec());
        Ok(s)
    }

    pub fn with_amplitude(&self, amplitude_dbfs: f64) -> Self {
        let mut s = self.clone();
        s.input.amplitude_dbfs = amplitude_dbfs;
        s
    }

    pub fn with_dc_offset(&self, dc_offset: f64) -> Self {
        let mut s = self.clone();
        s.input.dc_offset = dc_offset;
        s
    }
}
