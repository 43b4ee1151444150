use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{db, PsdEstimate};

/// Bins `0..DC_GUARD_BINS` never count as signal band.
pub const DC_GUARD_BINS: usize = 3;

/// Reported when the in-band residue is zero or at rounding level.
pub const MAX_SNDR_DB: f64 = 300.0;

/// Upper edge of the signal band, `fs / (2 OSR)`.
pub fn band_edge_hz(sample_rate_hz: f64, osr: f64) -> f64 {
    sample_rate_hz / (2.0 * osr)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SndrReport {
    pub sndr_db: f64,
    pub signal_power: f64,
    pub inband_nd_power: f64,
    pub signal_bin: usize,
    pub band_edge_hz: f64,
    /// Bins inside the band that were not counted as noise: the DC guard and
    /// the signal bins.
    pub excluded_bins: Vec<usize>,
}

/// In-band signal-to-noise-and-distortion ratio.
///
/// Signal power is the bin nearest `signal_freq_hz` plus the window's guard
/// bins on each side. Noise and distortion is every other bin from
/// [`DC_GUARD_BINS`] up to the last bin at or below `band_edge_hz`.
pub fn compute_sndr<T: Scalar>(
    psd: &PsdEstimate<T>,
    signal_freq_hz: f64,
    band_edge_hz: f64,
) -> Result<SndrReport> {
    let nyquist = psd.sample_rate_hz / 2.0;
    if !(band_edge_hz > 0.0 && band_edge_hz <= nyquist) {
        return Err(Error::config(format!(
            "band edge {band_edge_hz} Hz outside (0, {nyquist}] Hz"
        )));
    }
    if !(signal_freq_hz > 0.0 && signal_freq_hz < band_edge_hz) {
        return Err(Error::config(format!(
            "signal at {signal_freq_hz} Hz is outside the band (0, {band_edge_hz}) Hz"
        )));
    }
    let band_bin = ((band_edge_hz / psd.bin_width_hz) + 1e-9).floor() as usize;
    let band_bin = band_bin.min(psd.bin_power.len() - 1);
    let signal_bin = psd.bin_of(signal_freq_hz);
    let guard = psd.window.guard_bins();
    let sig_lo = signal_bin.saturating_sub(guard);
    let sig_hi = (signal_bin + guard).min(psd.bin_power.len() - 1);

    let signal_power: f64 = psd.bin_power[sig_lo..=sig_hi]
        .iter()
        .map(|p| p.to_f64_lossy())
        .sum();
    let mut excluded_bins: Vec<usize> = (0..DC_GUARD_BINS).collect();
    let mut nd = 0.0;
    for k in DC_GUARD_BINS..=band_bin {
        if (sig_lo..=sig_hi).contains(&k) {
            excluded_bins.push(k);
        } else {
            nd += psd.bin_power[k].to_f64_lossy();
        }
    }
    let floor = signal_power * 10f64.powf(-MAX_SNDR_DB / 10.0);
    let sndr_db = if signal_power > 0.0 {
        db(signal_power) - db(nd.max(floor))
    } else {
        f64::NEG_INFINITY
    };
    Ok(SndrReport {
        sndr_db,
        signal_power,
        inband_nd_power: nd,
        signal_bin,
        band_edge_hz,
        excluded_bins,
    })
}
