//! Measurement: averaged periodograms, in-band SNDR, spur detection and
//! dynamic-range sweeps.

mod psd;
mod range;
mod sndr;
mod tones;

pub use psd::{estimate_psd, PsdEstimate, Window};
pub use range::{max_deficit, sweep_dynamic_range, DrCurve, SweepFailure};
pub use sndr::{band_edge_hz, compute_sndr, SndrReport, DC_GUARD_BINS, MAX_SNDR_DB};
pub use tones::{
    detect_tones, Tone, ToneDetector, ToneReport, DEFAULT_FLOOR_HALF_WIDTH,
    DEFAULT_TONE_THRESHOLD_DB,
};

pub fn db(power: f64) -> f64 {
    10.0 * power.max(1e-300).log10()
}
