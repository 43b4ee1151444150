//! End-to-end pipeline and result bundles.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::dac::{run_dac, DacOutput};
use crate::error::{Error, Result};
use crate::io::{csv_bytes, write_atomic};
use crate::modulator::{run_modulator, ModulatorOutput};
use crate::scalar::Scalar;
use crate::select::Selector;
use crate::spectral::{
    compute_sndr, estimate_psd, sweep_dynamic_range, DrCurve, PsdEstimate, SndrReport,
    ToneDetector, ToneReport,
};

use super::plot::{LinePlot, Series};
use super::scenario::{Scenario, SweepConfig};

/// Everything produced by one scenario run.
#[derive(Debug, Clone)]
pub struct Simulation<T> {
    /// The resolved scenario that produced this run.
    pub scenario: Scenario,
    pub modulator: ModulatorOutput<T>,
    pub dac: DacOutput<T>,
    /// Spectrum of `v(n)` after the transient discard.
    pub psd: PsdEstimate<T>,
    pub sndr: SndrReport,
    pub tones: ToneReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub name: String,
    pub signal_freq_hz: f64,
    pub sndr: SndrReport,
    pub tones: ToneReport,
    pub saturated_cycles: usize,
}

impl<T: Scalar> Simulation<T> {
    pub fn report(&self) -> RunReport {
        RunReport {
            name: self.scenario.name.clone(),
            signal_freq_hz: self.scenario.input.freq_hz,
            sndr: self.sndr.clone(),
            tones: self.tones.clone(),
            saturated_cycles: self.modulator.saturated_cycles,
        }
    }

    /// CSV with columns `n, code, level`.
    pub fn codes_csv(&self) -> Result<Vec<u8>> {
        let m = &self.modulator;
        csv_bytes(
            &["n", "code", "level"],
            m.codes
                .iter()
                .zip(&m.levels)
                .enumerate()
                .map(|(n, (c, l))| [n.to_string(), c.0.to_string(), l.to_string()]),
        )
    }

    pub fn psd_svg(&self) -> String {
        let pts: Vec<(f64, f64)> = self
            .psd
            .bin_power
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, p)| (self.psd.freq_hz(k), crate::spectral::db(p.to_f64_lossy())))
            .collect();
        let label = format!("{} (SNDR {:.2} dB)", self.scenario.name, self.sndr.sndr_db);
        LinePlot {
            title: "PSD of v(n)",
            x_label: "frequency (Hz)",
            y_label: "power per bin (dB)",
            log_x: true,
            series: vec![Series {
                label: &label,
                points: &pts,
            }],
        }
        .to_svg()
    }

    /// Writes the result bundle into `dir` and returns the files written.
    pub fn write_bundle(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let report = serde_json::to_vec_pretty(&self.report())
            .map_err(|e| Error::config(format!("cannot encode report: {e}")))?;
        let files: Vec<(&str, Vec<u8>)> = vec![
            ("manifest.toml", self.scenario.to_toml()?.into_bytes()),
            ("codes.csv", self.codes_csv()?),
            ("selection.csv", self.dac.selection_csv()?),
            ("dac.csv", self.dac.to_csv()?),
            ("psd.csv", self.psd.to_csv()?),
            ("psd.svg", self.psd_svg().into_bytes()),
            ("report.json", report),
        ];
        write_files(dir, files)
    }
}

fn write_files(dir: &Path, files: Vec<(&str, Vec<u8>)>) -> Result<Vec<PathBuf>> {
    files
        .into_iter()
        .map(|(name, bytes)| {
            let path = dir.join(name);
            write_atomic(&path, &bytes)?;
            Ok(path)
        })
        .collect()
}

/// Input, modulator, selection, DAC and analysis, in the given precision.
pub fn simulate<T: Scalar>(scenario: &Scenario) -> Result<Simulation<T>> {
    let scenario = scenario.resolved()?;
    let bank = scenario.bank::<T>()?;

    let modulator = run_modulator::<T>(&scenario.input, &scenario.modulator)
        .map_err(|e| e.in_stage("modulator"))?;

    let mut selector = Selector::build(
        scenario.strategy.kind,
        scenario.element_count(),
        scenario.strategy.initial_pointer,
        scenario.added_sequence(),
    )?;
    let dac = run_dac(
        &modulator.codes,
        &mut selector,
        &bank,
        T::lit(scenario.modulator.delta),
    )
    .map_err(|e| e.in_stage("dac"))?;

    let a = &scenario.analysis;
    let analyse = || -> Result<(PsdEstimate<T>, SndrReport, ToneReport)> {
        let psd = estimate_psd(
            &dac.v[a.transient_discard..],
            scenario.input.sample_rate_hz,
            a.window,
            a.n_fft,
            a.overlap,
        )?;
        let band = scenario.band_edge_hz();
        let sndr = compute_sndr(&psd, scenario.input.freq_hz, band)?;
        let tones = ToneDetector {
            threshold_db: a.tone_threshold_db,
            floor_half_width: a.tone_floor_half_width,
        }
        .detect(&psd, band, Some(scenario.input.freq_hz))?;
        Ok((psd, sndr, tones))
    };
    let (psd, sndr, tones) = analyse().map_err(|e| e.in_stage("analysis"))?;
    Ok(Simulation {
        scenario,
        modulator,
        dac,
        psd,
        sndr,
        tones,
    })
}

/// [`simulate`] in `f64`.
pub fn run_scenario(scenario: &Scenario) -> Result<Simulation<f64>> {
    simulate(scenario)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Resolved scenario, with the swept amplitudes recorded in `sweep`.
    pub scenario: Scenario,
    pub curve: DrCurve,
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    name: &'a str,
    dynamic_range_db: Option<f64>,
    peak_amplitude_dbfs: Option<f64>,
    peak_sndr_db: Option<f64>,
    zero_crossing_dbfs: Option<f64>,
    curve: &'a DrCurve,
}

impl SweepResult {
    pub fn curve_svg(&self) -> String {
        let label = match self.curve.dynamic_range_db {
            Some(dr) => format!("{} (DR {dr:.1} dB)", self.scenario.name),
            None => self.scenario.name.clone(),
        };
        LinePlot {
            title: "SNDR versus input amplitude",
            x_label: "input amplitude (dBFS)",
            y_label: "SNDR (dB)",
            log_x: false,
            series: vec![Series {
                label: &label,
                points: &self.curve.points,
            }],
        }
        .to_svg()
    }

    pub fn write_bundle(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let peak = self.curve.peak();
        let summary = SweepSummary {
            name: &self.scenario.name,
            dynamic_range_db: self.curve.dynamic_range_db,
            peak_amplitude_dbfs: peak.map(|p| p.0),
            peak_sndr_db: peak.map(|p| p.1),
            zero_crossing_dbfs: self.curve.zero_crossing_dbfs(),
            curve: &self.curve,
        };
        let summary = serde_json::to_vec_pretty(&summary)
            .map_err(|e| Error::config(format!("cannot encode sweep summary: {e}")))?;
        write_files(
            dir,
            vec![
                ("manifest.toml", self.scenario.to_toml()?.into_bytes()),
                ("curve.csv", self.curve.to_csv()?),
                ("curve.svg", self.curve_svg().into_bytes()),
                ("sweep.json", summary),
            ],
        )
    }
}

/// SNDR sweep over `amplitudes` (or the scenario's own list), on up to
/// `jobs` threads. Configuration errors abort before any point runs;
/// per-point failures land in the curve.
pub fn run_sweep(
    scenario: &Scenario,
    amplitudes: Option<&[f64]>,
    jobs: usize,
) -> Result<SweepResult> {
    let amplitudes: Vec<f64> = match (amplitudes, &scenario.sweep) {
        (Some(a), _) => a.to_vec(),
        (None, Some(s)) => s.amplitudes_dbfs.clone(),
        (None, None) => super::presets::default_sweep_amplitudes(),
    };
    let mut base = scenario.clone();
    base.sweep = Some(SweepConfig {
        amplitudes_dbfs: amplitudes.clone(),
    });
    let base = base.resolved()?;
    for &a in &amplitudes {
        base.with_amplitude(a).validate()?;
    }
    let curve = sweep_dynamic_range(&amplitudes, jobs, |a| {
        simulate::<f64>(&base.with_amplitude(a)).map(|s| s.sndr.sndr_db)
    })?;
    Ok(SweepResult {
        scenario: base,
        curve,
    })
}
