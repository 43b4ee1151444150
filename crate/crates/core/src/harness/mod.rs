//! Scenario configuration, reference presets and result bundles.

pub mod plot;
pub mod presets;
mod run;
pub mod scenario;

pub use presets::{default_sweep_amplitudes, list_presets, preset};
pub use run::{run_scenario, run_sweep, simulate, RunReport, Simulation, SweepResult};
pub use scenario::{AnalysisConfig, BankConfig, Scenario, StrategyConfig, SweepConfig};
