//! Behavioral simulation of multibit sigma-delta DACs with dynamic element
//! matching.
//!
//! The pipeline is: test input ([`modulator::generate_input`]) →
//! second-order modulator ([`modulator::run_modulator`]) → element selection
//! ([`select`]: thermometer, DWA or added-sequence DWA) → mismatched
//! unit-element DAC ([`dac::run_dac`]) → spectral measurement ([`spectral`]).
//! [`harness`] ties the stages together behind serializable scenarios.
//!
//! Analog quantities are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the common `f64` instantiation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bank;
pub mod dac;
pub mod error;
pub mod harness;
pub mod io;
pub mod modulator;
pub mod scalar;
pub mod select;
pub mod spectral;

pub use bank::{ElementBank, MismatchSpec, QuantizerCode};
pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Bank = ElementBank<f64>;
pub type Bank32 = ElementBank<f32>;
pub type DacOutput = dac::DacOutput<f64>;
pub type DacOutput32 = dac::DacOutput<f32>;
pub type ModulatorOutput = modulator::ModulatorOutput<f64>;
pub type ModulatorOutput32 = modulator::ModulatorOutput<f32>;
pub type Psd = spectral::PsdEstimate<f64>;
pub type Psd32 = spectral::PsdEstimate<f32>;
pub type Simulation = harness::Simulation<f64>;
pub type Simulation32 = harness::Simulation<f32>;
