//! Built-in scenarios replaying the reference experiments.

use crate::error::{Error, Result};
use crate::modulator::{InputSpec, ModulatorConfig};
use crate::select::{AddedKind, StrategyKind};

use super::scenario::{AnalysisConfig, BankConfig, Scenario, StrategyConfig, SweepConfig};

/// Sample rate of the reference experiments.
pub const SAMPLE_RATE_HZ: f64 = 12.5e6;
/// Test tone; snapped to bin 30 of a 65536-point FFT (5722.05 Hz).
pub const TONE_HZ: f64 = 5.72e3;
pub const OSR: f64 = 128.0;

/// 22 amplitudes from -106 to -1 dBFS in 5 dB steps.
pub fn default_sweep_amplitudes() -> Vec<f64> {
    (0..22).map(|i| -106.0 + 5.0 * i as f64).collect()
}

pub const PRESETS: &[(&str, &str)] = &[
    ("fig2-ideal", "PSD figure reference: ideal 7-element DAC at -50 dBFS"),
    ("fig2-top", "PSD figure, top: original DWA, 7 mismatched elements, -50 dBFS, no offset"),
    ("fig2-mid", "PSD figure, middle: SaDWA over 8 elements with s(n) = 0, -50 dBFS, no offset"),
    ("fig2-bottom", "PSD figure, bottom: SaDWA with s(n) = 0 and a +delta/2 input offset"),
    ("fig4-a", "dynamic-range figure, curve a: ideal DAC"),
    ("fig4-b", "dynamic-range figure, curve b: original DWA"),
    (
        "fig4-c",
        "dynamic-range figure, curve c: SaDWA with s(n) = 1 (alternating 0,1 is `added = \"periodic_01\"`)",
    ),
    ("fig4-d", "dynamic-range figure, curve d: SaDWA with s(n) = 0"),
];

fn base(name: &str, kind: StrategyKind, added: AddedKind, bank: &str) -> Scenario {
    let analysis = AnalysisConfig::default();
    let description = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, d)| d.to_string())
        .unwrap_or_default();
    Scenario {
        name: name.into(),
        description,
        seed: 1,
        input: InputSpec {
            amplitude_dbfs: -50.0,
            freq_hz: TONE_HZ,
            dc_offset: 0.0,
            sample_rate_hz: SAMPLE_RATE_HZ,
            n_samples: analysis.transient_discard + analysis.n_fft,
        },
        modulator: ModulatorConfig::default(),
        strategy: StrategyConfig {
            kind,
            added,
            initial_pointer: 1,
        },
        bank: BankConfig::preset(bank),
        analysis,
        sweep: None,
    }
}

fn with_sweep(mut s: Scenario) -> Scenario {
    s.sweep = Some(SweepConfig {
        amplitudes_dbfs: default_sweep_amplitudes(),
    });
    s
}

pub fn preset(name: &str) -> Result<Scenario> {
    use AddedKind::*;
    use StrategyKind::*;
    Ok(match name {
        "fig2-ideal" => base(name, Thermometer, ConstantZero, "ideal-7"),
        "fig2-top" => base(name, Dwa, ConstantZero, "reference-7"),
        "fig2-mid" => base(name, Sadwa, ConstantZero, "reference-8"),
        "fig2-bottom" => base(name, Sadwa, ConstantZero, "reference-8").with_dc_offset(0.5),
        "fig4-a" => with_sweep(base(name, Thermometer, ConstantZero, "ideal-7")),
        "fig4-b" => with_sweep(base(name, Dwa, ConstantZero, "reference-7")),
        "fig4-c" => with_sweep(base(name, Sadwa, ConstantOne, "reference-8")),
        "fig4-d" => with_sweep(base(name, Sadwa, ConstantZero, "reference-8")),
        other => {
            let known: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
            return Err(Error::config(format!(
                "unknown preset `{other}` (known: {})",
                known.join(", ")
            )));
        }
    })
}

pub fn list_presets() -> &'static [(&'static str, &'static str)] {
    PRESETS
}
