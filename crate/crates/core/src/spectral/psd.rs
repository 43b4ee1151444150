use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::csv_bytes;
use crate::scalar::Scalar;

use super::db;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Rectangular,
    #[default]
    Hann,
}

impl Window {
    /// Periodic window of length `n`.
    pub fn coefficients<T: Scalar>(self, n: usize) -> Vec<T> {
        match self {
            Window::Rectangular => vec![T::one(); n],
            Window::Hann => {
                let two_pi = T::PI() + T::PI();
                let nf = T::from_count(n);
                let half = T::lit(0.5);
                (0..n)
                    .map(|i| half - half * (two_pi * T::from_count(i) / nf).cos())
                    .collect()
            }
        }
    }

    /// Bins on each side of a coherent tone's peak bin that share its power.
    pub fn lobe_half_width(self) -> usize {
        match self {
            Window::Rectangular => 0,
            Window::Hann => 1,
        }
    }

    /// Bins on each side of the signal bin counted as signal.
    pub fn guard_bins(self) -> usize {
        match self {
            Window::Rectangular => 0,
            Window::Hann => 3,
        }
    }
}

impl std::str::FromStr for Window {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "rectangular" | "rect" => Ok(Window::Rectangular),
            "hann" => Ok(Window::Hann),
            other => Err(format!("unknown window `{other}`")),
        }
    }
}

/// One-sided averaged periodogram, in power per bin.
///
/// Bins are scaled so that their sum equals the window-weighted mean square
/// of the (mean-removed) segments.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdEstimate<T> {
    pub bin_power: Vec<T>,
    pub bin_width_hz: f64,
    pub sample_rate_hz: f64,
    pub window: Window,
    pub n_fft: usize,
    pub n_averages: usize,
}

impl<T: Scalar> PsdEstimate<T> {
    pub fn freq_hz(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_width_hz
    }

    /// Nearest bin to `freq_hz`.
    pub fn bin_of(&self, freq_hz: f64) -> usize {
        (freq_hz / self.bin_width_hz).round().max(0.0) as usize
    }

    pub fn total_power(&self) -> T {
        self.bin_power.iter().fold(T::zero(), |acc, &p| acc + p)
    }

    /// CSV with columns `freq_hz, power_db`.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        csv_bytes(
            &["freq_hz", "power_db"],
            self.bin_power.iter().enumerate().map(|(k, p)| {
                [
                    self.freq_hz(k).to_string(),
                    db(p.to_f64_lossy()).to_string(),
                ]
            }),
        )
    }
}

/// Averaged windowed periodogram: split into `n_fft` segments with the given
/// overlap, remove each segment's mean, window, transform, average.
pub fn estimate_psd<T: Scalar>(
    samples: &[T],
    sample_rate_hz: f64,
    window: Window,
    n_fft: usize,
    overlap_fraction: f64,
) -> Result<PsdEstimate<T>> {
    if n_fft < 2 || !n_fft.is_power_of_two() {
        return Err(Error::config(format!(
            "n_fft must be a power of two, got {n_fft}"
        )));
    }
    if samples.len() < n_fft {
        return Err(Error::config(format!(
            "need at least {n_fft} samples, got {}",
            samples.len()
        )));
    }
    if !(0.0..1.0).contains(&overlap_fraction) {
        return Err(Error::config(format!(
            "overlap must lie in [0, 1), got {overlap_fraction}"
        )));
    }
    if !(sample_rate_hz > 0.0) {
        return Err(Error::config("sample rate must be positive"));
    }
    let step = ((n_fft as f64 * (1.0 - overlap_fraction)).round() as usize).max(1);
    let n_averages = (samples.len() - n_fft) / step + 1;

    let w: Vec<T> = window.coefficients(n_fft);
    let w_power = w.iter().fold(T::zero(), |acc, &c| acc + c * c);
    let fft: Arc<dyn Fft<T>> = FftPlanner::new().plan_fft_forward(n_fft);

    let n_bins = n_fft / 2 + 1;
    let mut acc = vec![T::zero(); n_bins];
    let mut buf = vec![Complex::new(T::zero(), T::zero()); n_fft];
    let mut scratch = vec![Complex::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
    for seg in 0..n_averages {
        let x = &samples[seg * step..seg * step + n_fft];
        let mean = x.iter().fold(T::zero(), |a, &v| a + v) / T::from_count(n_fft);
        for ((b, &xi), &wi) in buf.iter_mut().zip(x).zip(&w) {
            *b = Complex::new((xi - mean) * wi, T::zero());
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a = *a + b.norm_sqr();
        }
    }
    let norm = T::from_count(n_fft) * w_power * T::from_count(n_averages);
    let two = T::lit(2.0);
    let bin_power = acc
        .into_iter()
        .enumerate()
        .map(|(k, p)| {
            let one_sided = if k == 0 || k == n_fft / 2 { p } else { two * p };
            one_sided / norm
        })
        .collect();
    Ok(PsdEstimate {
        bin_power,
        bin_width_hz: sample_rate_hz / n_fft as f64,
        sample_rate_hz,
        window,
        n_fft,
        n_averages,
    })
}
