//! Test-signal generation and the second-order multibit modulator.
//!
//! The loop is a cascade of two integrators with feedback (CIFB) around a
//! mid-rise quantizer:
//!
//! ```text
//! i1[n] = i1[n-1] + x[n]    - a1 * q[n-1]
//! i2[n] = i2[n-1] + i1[n]   - a2 * q[n-1]
//! q[n]  = Q(i2[n])
//! ```
//!
//! With `a1 = a2 = 1` the signal transfer is unity and the quantization
//! noise is shaped by `(1 - z^-1)^2`.

use serde::{Deserialize, Serialize};

use crate::bank::QuantizerCode;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Sinusoidal test input with an optional DC offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputSpec {
    /// Sine amplitude relative to the quantizer's peak level.
    pub amplitude_dbfs: f64,
    pub freq_hz: f64,
    /// DC offset in units of the quantizer step.
    #[serde(default)]
    pub dc_offset: f64,
    pub sample_rate_hz: f64,
    pub n_samples: usize,
}

impl InputSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(Error::config(format!(
                "sample rate must be positive, got {}",
                self.sample_rate_hz
            )));
        }
        if !(self.freq_hz > 0.0 && self.freq_hz < self.sample_rate_hz / 2.0) {
            return Err(Error::config(format!(
                "input frequency {} Hz must lie in (0, {}) Hz",
                self.freq_hz,
                self.sample_rate_hz / 2.0
            )));
        }
        if self.amplitude_dbfs.is_nan() || self.amplitude_dbfs == f64::INFINITY {
            return Err(Error::config(format!(
                "amplitude {} dBFS is not usable",
                self.amplitude_dbfs
            )));
        }
        if !self.dc_offset.is_finite() {
            return Err(Error::config("dc offset must be finite"));
        }
        if self.n_samples == 0 {
            return Err(Error::config("n_samples must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModulatorConfig {
    /// Quantizer resolution; the quantizer has `2^bits` levels.
    pub bits: u32,
    /// Quantizer step.
    pub delta: f64,
    pub a1: f64,
    pub a2: f64,
    /// Integrator magnitude, in steps, above which the loop counts as unstable.
    pub blowup_bound: f64,
}

impl Default for ModulatorConfig {
    fn default() -> Self {
        Self {
            bits: 3,
            delta: 1.0,
            a1: 1.0,
            a2: 1.0,
            blowup_bound: 1.0e3,
        }
    }
}

impl ModulatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=16).contains(&self.bits) {
            return Err(Error::config(format!(
                "quantizer bits must be in 1..=16, got {}",
                self.bits
            )));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::config(format!(
                "quantizer step must be positive, got {}",
                self.delta
            )));
        }
        if !(self.a1.is_finite() && self.a2.is_finite()) {
            return Err(Error::config("loop coefficients must be finite"));
        }
        if !(self.blowup_bound > 0.0) {
            return Err(Error::config("blow-up bound must be positive"));
        }
        Ok(())
    }

    pub fn levels(&self) -> usize {
        1 << self.bits
    }

    /// Largest code, `L = 2^bits - 1`. Also the element count of a plain DAC.
    pub fn max_code(&self) -> usize {
        self.levels() - 1
    }

    /// Peak reconstruction level, `L * delta / 2`.
    pub fn full_scale(&self) -> f64 {
        self.max_code() as f64 * self.delta / 2.0
    }

    /// Reconstruction level of `code`: `(code - L/2) * delta`.
    pub fn level<T: Scalar>(&self, code: QuantizerCode) -> T {
        let l = self.max_code() as f64;
        T::lit((code.0 as f64 - l / 2.0) * self.delta)
    }
}

/// Samples `x(n) = A sin(2 pi f n / fs) + offset * delta`, with `A` taken
/// relative to the modulator's full scale.
pub fn generate_input<T: Scalar>(spec: &InputSpec, config: &ModulatorConfig) -> Result<Vec<T>> {
    spec.validate()?;
    config.validate()?;
    let amplitude = T::lit(config.full_scale() * 10f64.powf(spec.amplitude_dbfs / 20.0));
    let offset = T::lit(spec.dc_offset * config.delta);
    let cycles_per_sample = spec.freq_hz / spec.sample_rate_hz;
    let two_pi = T::PI() + T::PI();
    Ok((0..spec.n_samples)
        .map(|n| {
            // reduce the phase in f64 so long f32 records keep their accuracy
            let frac = (cycles_per_sample * n as f64).fract();
            amplitude * (two_pi * T::lit(frac)).sin() + offset
        })
        .collect())
}

/// Mid-rise uniform quantizer with saturation at codes 0 and `L`.
pub fn quantize<T: Scalar>(v: T, config: &ModulatorConfig) -> QuantizerCode {
    let max = config.max_code() as i64;
    let shift = T::lit((max + 1) as f64 / 2.0);
    let raw = (v / T::lit(config.delta) + shift).floor();
    let code = raw
        .to_i64()
        .unwrap_or(if raw > T::zero() { max } else { 0 });
    QuantizerCode(code.clamp(0, max) as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SdmState<T> {
    pub integ1: T,
    pub integ2: T,
    /// Quantized level from the previous cycle, fed back this cycle.
    pub feedback: T,
}

/// Advances the loop by one sample.
pub fn sdm_step<T: Scalar>(
    state: SdmState<T>,
    x: T,
    config: &ModulatorConfig,
) -> Result<(QuantizerCode, T, SdmState<T>)> {
    let integ1 = state.integ1 + x - T::lit(config.a1) * state.feedback;
    let integ2 = state.integ2 + integ1 - T::lit(config.a2) * state.feedback;
    let bound = config.blowup_bound * config.delta;
    for s in [integ1, integ2] {
        if !s.is_finite() || s.abs().to_f64_lossy() > bound {
            return Err(Error::Unstable {
                sample: 0,
                state: s.to_f64_lossy(),
                bound,
            });
        }
    }
    let code = quantize(integ2, config);
    let level = config.level(code);
    Ok((
        code,
        level,
        SdmState {
            integ1,
            integ2,
            feedback: level,
        },
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModulatorOutput<T> {
    pub codes: Vec<QuantizerCode>,
    /// Ideal reconstruction levels `y_sd(n)`.
    pub levels: Vec<T>,
    /// Cycles where the quantizer input was outside its no-overload range.
    pub saturated_cycles: usize,
}

/// Runs the modulator from the zero state over the generated input.
pub fn run_modulator<T: Scalar>(
    spec: &InputSpec,
    config: &ModulatorConfig,
) -> Result<ModulatorOutput<T>> {
    let input = generate_input::<T>(spec, config)?;
    modulate(&input, config)
}

/// Runs the modulator from the zero state over an arbitrary input.
pub fn modulate<T: Scalar>(input: &[T], config: &ModulatorConfig) -> Result<ModulatorOutput<T>> {
    config.validate()?;
    let half_step = T::lit(config.delta / 2.0);
    let mut state = SdmState::default();
    let mut codes = Vec::with_capacity(input.len());
    let mut levels = Vec::with_capacity(input.len());
    let mut saturated_cycles = 0;
    for (n, &x) in input.iter().enumerate() {
        let (code, level, next) = sdm_step(state, x, config).map_err(|e| match e {
            Error::Unstable { state, bound, .. } => Error::Unstable {
                sample: n,
                state,
                bound,
            },
            other => other,
        })?;
        if (next.integ2 - level).abs() > half_step {
            saturated_cycles += 1;
        }
        state = next;
        codes.push(code);
        levels.push(level);
    }
    Ok(ModulatorOutput {
        codes,
        levels,
        saturated_cycles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fig2_input() -> InputSpec {
        InputSpec {
            amplitude_dbfs: -50.0,
            freq_hz: 5.72e3,
            dc_offset: 0.0,
            sample_rate_hz: 12.5e6,
            n_samples: 1 << 16,
        }
    }

    fn dc_input(offset: f64, n: usize) -> InputSpec {
        InputSpec {
            amplitude_dbfs: f64::NEG_INFINITY,
            dc_offset: offset,
            n_samples: n,
            ..fig2_input()
        }
    }

    #[test]
    fn quantizer_levels_around_zero() {
        let c = ModulatorConfig::default();
        assert_eq!(quantize(0.25, &c), QuantizerCode(4));
        assert_eq!(quantize(-0.25, &c), QuantizerCode(3));
        assert_eq!(c.level::<f64>(QuantizerCode(4)), 0.5);
        assert_eq!(c.level::<f64>(QuantizerCode(3)), -0.5);
        assert_eq!(quantize(1e6, &c), QuantizerCode(7));
        assert_eq!(quantize(-1e6, &c), QuantizerCode(0));
        assert_eq!(quantize(f64::INFINITY, &c), QuantizerCode(7));
        assert_eq!(quantize(3.4f32, &c), QuantizerCode(7));
        assert_eq!(c.max_code(), 7);
        assert_eq!(c.full_scale(), 3.5);
    }

    #[test]
    fn silent_input_is_zero() {
        let x: Vec<f64> = generate_input(&dc_input(0.0, 64), &ModulatorConfig::default()).unwrap();
        assert!(x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn input_peak_follows_full_scale_definition() {
        let x: Vec<f64> = generate_input(&fig2_input(), &ModulatorConfig::default()).unwrap();
        let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let expected = 3.5 * 10f64.powf(-2.5);
        assert!((expected - 0.011068).abs() < 1e-6);
        // 5.72 kHz at 12.5 MHz never samples the crest exactly; the miss is
        // below 1 - cos(pi * f / fs)
        assert!(peak <= expected && peak > expected * (1.0 - 1e-6), "{peak}");
    }

    #[test]
    fn dc_offset_input_is_constant() {
        let x: Vec<f64> = generate_input(&dc_input(0.5, 32), &ModulatorConfig::default()).unwrap();
        assert!(x.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn rejects_bad_inputs() {
        let c = ModulatorConfig::default();
        let mut s = fig2_input();
        s.freq_hz = 6.25e6;
        assert!(generate_input::<f64>(&s, &c).is_err());
        s.freq_hz = 0.0;
        assert!(generate_input::<f64>(&s, &c).is_err());
        let mut s = fig2_input();
        s.n_samples = 0;
        assert!(generate_input::<f64>(&s, &c).is_err());
        let bad = ModulatorConfig {
            delta: 0.0,
            ..Default::default()
        };
        assert!(generate_input::<f64>(&fig2_input(), &bad).is_err());
    }

    #[test]
    fn zero_input_limit_cycle() {
        let out: ModulatorOutput<f64> =
            run_modulator(&dc_input(0.0, 4096), &ModulatorConfig::default()).unwrap();
        assert!(out.codes.iter().all(|c| c.0 == 3 || c.0 == 4));
        // settles into 4, 3, 3, 4, ...
        let tail: Vec<usize> = out.codes[64..].iter().map(|c| c.0).collect();
        assert_eq!(crate::select::detect_period(&tail), Some(4));
        let one: ModulatorOutput<f64> =
            run_modulator(&dc_input(0.0, 1), &ModulatorConfig::default()).unwrap();
        assert_eq!(one.codes.len(), 1);
        assert!(matches!(one.codes[0].0, 3 | 4));
    }

    fn code_histogram(codes: &[QuantizerCode]) -> [usize; 8] {
        let mut h = [0; 8];
        for c in codes {
            h[c.0] += 1;
        }
        h
    }

    #[test]
    fn half_step_offsets_pin_the_code() {
        let c = ModulatorConfig::default();
        let up: ModulatorOutput<f64> = run_modulator(&dc_input(0.5, 8192), &c).unwrap();
        let h = code_histogram(&up.codes[256..]);
        assert!(h[4] > h.iter().sum::<usize>() * 9 / 10, "{h:?}");
        let down: ModulatorOutput<f64> = run_modulator(&dc_input(-0.5, 8192), &c).unwrap();
        let h = code_histogram(&down.codes[256..]);
        assert!(h[3] > h.iter().sum::<usize>() * 9 / 10, "{h:?}");
    }

    #[test]
    fn fig2_codes_concentrate_on_mid_codes() {
        let out: ModulatorOutput<f64> =
            run_modulator(&fig2_input(), &ModulatorConfig::default()).unwrap();
        let h = code_histogram(&out.codes);
        let mid = h[3] + h[4];
        assert!(mid as f64 > 0.8 * out.codes.len() as f64, "{h:?}");
        assert!(
            h.iter()
                .enumerate()
                .all(|(k, &n)| (2..=5).contains(&k) || n == 0),
            "{h:?}"
        );
        assert_eq!(out.saturated_cycles, 0);
    }

    #[test]
    fn dc_gain_tracks_input_mean() {
        let c = ModulatorConfig::default();
        for offset in [-1.7, -0.5, -0.123, 0.0, 0.31, 1.25, 2.0] {
            let out: ModulatorOutput<f64> = run_modulator(&dc_input(offset, 1 << 16), &c).unwrap();
            let mean = out.levels.iter().sum::<f64>() / out.levels.len() as f64;
            assert!((mean - offset).abs() < 0.01, "offset {offset}: mean {mean}");
        }
    }

    #[test]
    fn overload_is_flagged() {
        // a 0 dBFS sine plus half a step drives the integrators past the bound
        let spec = InputSpec {
            amplitude_dbfs: 0.0,
            dc_offset: 0.5,
            ..fig2_input()
        };
        let err = run_modulator::<f64>(&spec, &ModulatorConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Unstable { .. }), "{err}");
        assert_eq!(err.exit_code(), 3);
        let spec = InputSpec {
            amplitude_dbfs: -1.0,
            ..spec
        };
        assert!(run_modulator::<f64>(&spec, &ModulatorConfig::default()).is_err());
        // without the offset, -1 dBFS stays bounded but touches the rails
        let spec = InputSpec {
            dc_offset: 0.0,
            ..spec
        };
        let out: ModulatorOutput<f64> = run_modulator(&spec, &ModulatorConfig::default()).unwrap();
        assert!(out.saturated_cycles > 0, "{}", out.saturated_cycles);
    }

    #[test]
    fn f32_run_matches_f64_statistics() {
        let a: ModulatorOutput<f64> =
            run_modulator(&fig2_input(), &ModulatorConfig::default()).unwrap();
        let b: ModulatorOutput<f32> =
            run_modulator(&fig2_input(), &ModulatorConfig::default()).unwrap();
        let ha = code_histogram(&a.codes);
        let hb = code_histogram(&b.codes);
        for k in 0..8 {
            assert!(
                (ha[k] as f64 - hb[k] as f64).abs() < 0.02 * a.codes.len() as f64,
                "{ha:?} {hb:?}"
            );
        }
    }

    proptest! {
        #[test]
        fn quantizer_is_monotone(a in -10.0f64..10.0, b in -10.0f64..10.0, bits in 1u32..6) {
            let c = ModulatorConfig { bits, ..Default::default() };
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(quantize(lo, &c) <= quantize(hi, &c));
        }

        #[test]
        fn quantizer_picks_nearest_level_in_range(v in -3.4f64..3.4) {
            let c = ModulatorConfig::default();
            let level: f64 = c.level(quantize(v, &c));
            prop_assert!((level - v).abs() <= 0.5 + 1e-12);
        }

        #[test]
        fn modulator_is_pure(amp in -90.0f64..-3.0, offset in -1.0f64..1.0) {
            let spec = InputSpec { amplitude_dbfs: amp, dc_offset: offset, n_samples: 2048, ..fig2_input() };
            let a: ModulatorOutput<f64> = run_modulator(&spec, &ModulatorConfig::default()).unwrap();
            let b: ModulatorOutput<f64> = run_modulator(&spec, &ModulatorConfig::default()).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
