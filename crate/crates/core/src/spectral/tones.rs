use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{db, PsdEstimate, DC_GUARD_BINS};

pub const DEFAULT_TONE_THRESHOLD_DB: f64 = 12.0;

/// Half width, in bins, of the running-median floor around each candidate.
pub const DEFAULT_FLOOR_HALF_WIDTH: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tone {
    pub bin: usize,
    pub freq_hz: f64,
    /// Power above the local floor at this bin.
    pub power_db_above_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToneReport {
    pub tones: Vec<Tone>,
    /// Median in-band bin power, in dB.
    pub noise_floor_db: f64,
}

impl ToneReport {
    pub fn count(&self) -> usize {
        self.tones.len()
    }
}

/// In-band spur finder.
///
/// A bin is a tone when it is a local maximum and the power in its window
/// main lobe exceeds the running median of the surrounding bins (scaled to
/// the lobe width) by `threshold_db`. The floor is local because shaped
/// noise climbs by tens of dB across the band; the median skips the
/// candidate's lobe and one bin beyond it, the DC guard and the signal bins.
/// The floor window may reach past the band edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToneDetector {
    pub threshold_db: f64,
    pub floor_half_width: usize,
}

impl Default for ToneDetector {
    fn default() -> Self {
        Self {
            threshold_db: DEFAULT_TONE_THRESHOLD_DB,
            floor_half_width: DEFAULT_FLOOR_HALF_WIDTH,
        }
    }
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_unstable_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

impl ToneDetector {
    pub fn detect<T: Scalar>(
        &self,
        psd: &PsdEstimate<T>,
        band_edge_hz: f64,
        signal_freq_hz: Option<f64>,
    ) -> Result<ToneReport> {
        if !(self.threshold_db > 0.0) {
            return Err(Error::config(format!(
                "tone threshold must be positive, got {}",
                self.threshold_db
            )));
        }
        if self.floor_half_width < 2 {
            return Err(Error::config(
                "floor window must span at least 2 bins each side",
            ));
        }
        let p: Vec<f64> = psd.bin_power.iter().map(|v| v.to_f64_lossy()).collect();
        let last = p.len() - 1;
        let band_bin = (((band_edge_hz / psd.bin_width_hz) + 1e-9).floor() as usize).min(last);
        let guard = psd.window.guard_bins();
        let signal = signal_freq_hz.map(|f| {
            let b = psd.bin_of(f);
            (b.saturating_sub(guard), b + guard)
        });
        let usable =
            |k: usize| k >= DC_GUARD_BINS && !signal.is_some_and(|(lo, hi)| (lo..=hi).contains(&k));

        let mut inband: Vec<f64> = (DC_GUARD_BINS..=band_bin)
            .filter(|&k| usable(k))
            .map(|k| p[k])
            .collect();
        let noise_floor_db = db(median(&mut inband));

        let threshold = 10f64.powf(self.threshold_db / 10.0);
        let hw = self.floor_half_width;
        let lobe = psd.window.lobe_half_width();
        let lobe_power = |k: usize| -> f64 {
            p[k.saturating_sub(lobe)..=(k + lobe).min(last)]
                .iter()
                .sum()
        };
        let mut tones = Vec::new();
        let mut window = Vec::with_capacity(2 * hw + 1);
        for k in (DC_GUARD_BINS..=band_bin).filter(|&k| usable(k)) {
            let left = if k > 0 { p[k - 1] } else { 0.0 };
            let right = if k < last { p[k + 1] } else { 0.0 };
            if p[k] < left || p[k] < right {
                continue;
            }
            window.clear();
            window.extend(
                (k.saturating_sub(hw)..=(k + hw).min(last))
                    .filter(|&j| usable(j) && j.abs_diff(k) > lobe + 1)
                    .map(|j| p[j]),
            );
            // compare lobe against lobe: a tone's power spans 2 * lobe + 1 bins
            let floor = median(&mut window) * (2 * lobe + 1) as f64;
            let power = lobe_power(k);
            if power > floor * threshold {
                tones.push(Tone {
                    bin: k,
                    freq_hz: psd.freq_hz(k),
                    power_db_above_floor: db(power) - db(floor),
                });
            }
        }
        Ok(ToneReport {
            tones,
            noise_floor_db,
        })
    }
}

/// [`ToneDetector`] with the default floor window.
pub fn detect_tones<T: Scalar>(
    psd: &PsdEstimate<T>,
    band_edge_hz: f64,
    signal_freq_hz: Option<f64>,
    threshold_db: f64,
) -> Result<ToneReport> {
    ToneDetector {
        threshold_db,
        ..Default::default()
    }
    .detect(psd, band_edge_hz, signal_freq_hz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{estimate_psd, Window};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    const N: usize = 1 << 14;

    fn noise(seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        (0..N).map(|_| normal.sample(&mut rng)).collect()
    }

    fn with_spur(mut x: Vec<f64>, bin: usize, amp: f64) -> Vec<f64> {
        for (i, v) in x.iter_mut().enumerate() {
            *v += amp * (2.0 * std::f64::consts::PI * (bin * i) as f64 / N as f64).cos();
        }
        x
    }

    #[test]
    fn white_noise_false_alarm_rate() {
        let runs = 300u64;
        let alarms = (0..runs)
            .filter(|&seed| {
                let psd = estimate_psd(&noise(seed), N as f64, Window::Hann, N, 0.0).unwrap();
                detect_tones(&psd, 256.0, None, DEFAULT_TONE_THRESHOLD_DB)
                    .unwrap()
                    .count()
                    > 0
            })
            .count();
        assert!(
            alarms as u64 * 100 <= runs,
            "{alarms} of {runs} runs had false tones"
        );
    }

    #[test]
    fn finds_an_injected_spur() {
        // unit-variance noise averages 2/N per bin; a 0.2 cosine puts
        // ~0.013 in its centre bin under Hann (~22 dB above the median)
        let psd = estimate_psd(
            &with_spur(noise(3), 500, 0.2),
            N as f64,
            Window::Hann,
            N,
            0.0,
        )
        .unwrap();
        let r = detect_tones(&psd, 1024.0, None, 12.0).unwrap();
        assert_eq!(r.tones.iter().map(|t| t.bin).collect::<Vec<_>>(), vec![500]);
        assert!(r.tones[0].power_db_above_floor >= 12.0);
        assert!(
            (r.noise_floor_db - db(std::f64::consts::LN_2 / 8192.0)).abs() < 0.5,
            "{}",
            r.noise_floor_db
        );
    }

    #[test]
    fn signal_and_dc_are_not_tones() {
        let x = with_spur(noise(4), 100, 1.0);
        let x: Vec<f64> = x.iter().map(|v| v + 20.0).collect();
        let psd = estimate_psd(&x, N as f64, Window::Hann, N, 0.0).unwrap();
        let r = detect_tones(&psd, 1024.0, Some(100.0), 12.0).unwrap();
        assert_eq!(r.count(), 0, "{:?}", r.tones);
        let r = detect_tones(&psd, 1024.0, None, 12.0).unwrap();
        assert_eq!(r.tones.iter().map(|t| t.bin).collect::<Vec<_>>(), vec![100]);
    }

    #[test]
    fn rejects_non_positive_threshold() {
        let psd = estimate_psd(&noise(5), N as f64, Window::Hann, N, 0.0).unwrap();
        assert!(detect_tones(&psd, 1024.0, None, 0.0).is_err());
    }
}
