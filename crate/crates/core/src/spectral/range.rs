use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::csv_bytes;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub amplitude_dbfs: f64,
    pub error: String,
}

/// SNDR versus input amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrCurve {
    /// `(amplitude_dbfs, sndr_db)`, amplitudes strictly increasing.
    pub points: Vec<(f64, f64)>,
    /// Amplitude span from the SNDR peak down to the SNDR = 0 crossing.
    /// `None` when the curve never drops below 0 dB under its peak.
    pub dynamic_range_db: Option<f64>,
    /// Points whose simulation failed; not part of `points`.
    pub failures: Vec<SweepFailure>,
}

impl DrCurve {
    pub fn from_points(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(Error::config(
                "sweep amplitudes must be strictly increasing",
            ));
        }
        let mut curve = Self {
            points,
            dynamic_range_db: None,
            failures: Vec::new(),
        };
        curve.dynamic_range_db = curve
            .peak()
            .zip(curve.zero_crossing_dbfs())
            .map(|((a, _), z)| a - z);
        Ok(curve)
    }

    /// `(amplitude, sndr)` of the highest SNDR; the lowest amplitude wins ties.
    pub fn peak(&self) -> Option<(f64, f64)> {
        self.points
            .iter()
            .copied()
            .fold(None, |best: Option<(f64, f64)>, p| match best {
                Some(b) if b.1 >= p.1 => Some(b),
                _ => Some(p),
            })
    }

    /// Walking down from the peak, the first amplitude where SNDR crosses
    /// 0 dB, interpolated linearly between the bracketing points.
    pub fn zero_crossing_dbfs(&self) -> Option<f64> {
        let peak_idx = self.points.iter().position(|&p| Some(p) == self.peak())?;
        (0..peak_idx).rev().find_map(|i| {
            let (a0, s0) = self.points[i];
            let (a1, s1) = self.points[i + 1];
            (s0 <= 0.0 && s1 > 0.0).then(|| a0 + (0.0 - s0) * (a1 - a0) / (s1 - s0))
        })
    }

    pub fn sndr_at(&self, amplitude_dbfs: f64) -> Option<f64> {
        self.points
            .iter()
            .find(|p| (p.0 - amplitude_dbfs).abs() < 1e-9)
            .map(|p| p.1)
    }

    /// CSV with columns `amplitude_dbfs, sndr_db`.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        csv_bytes(
            &["amplitude_dbfs", "sndr_db"],
            self.points
                .iter()
                .map(|(a, s)| [a.to_string(), s.to_string()]),
        )
    }
}

/// Largest `reference - other` SNDR gap over the amplitudes both curves
/// share, as `(amplitude, deficit)`.
pub fn max_deficit(reference: &DrCurve, other: &DrCurve) -> Option<(f64, f64)> {
    reference
        .points
        .iter()
        .filter_map(|&(a, s)| other.sndr_at(a).map(|o| (a, s - o)))
        .fold(None, |best: Option<(f64, f64)>, p| match best {
            Some(b) if b.1 >= p.1 => Some(b),
            _ => Some(p),
        })
}

/// Evaluates `measure` at every amplitude, on up to `jobs` threads.
///
/// Failed points are collected in [`DrCurve::failures`]; the sweep itself
/// only fails on an invalid amplitude list.
pub fn sweep_dynamic_range<F>(amplitudes: &[f64], jobs: usize, measure: F) -> Result<DrCurve>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if amplitudes.is_empty() {
        return Err(Error::config("sweep needs at least one amplitude"));
    }
    if amplitudes.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::config(
            "sweep amplitudes must be strictly increasing",
        ));
    }
    let results: Vec<Result<f64>> = if jobs <= 1 {
        amplitudes.iter().map(|&a| measure(a)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::config(format!("cannot start {jobs} workers: {e}")))?;
        pool.install(|| amplitudes.par_iter().map(|&a| measure(a)).collect())
    };
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for (&a, r) in amplitudes.iter().zip(results) {
        match r {
            Ok(s) => points.push((a, s)),
            Err(e) => failures.push(SweepFailure {
                amplitude_dbfs: a,
                error: e.to_string(),
            }),
        }
    }
    let mut curve = DrCurve::from_points(points)?;
    curve.failures = failures;
    Ok(curve)
}
