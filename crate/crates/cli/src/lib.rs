//! Experiment orchestration for the glearn learners: TOML configuration,
//! seeded parallel runs, parameter sweeps and CSV output.

pub mod config;
pub mod error;
pub mod experiment;
pub mod output;
pub mod sweep;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
pub use experiment::{resolve_workers, run_experiment, ExperimentResult};
pub use output::emit_csv;
pub use sweep::{k_sweep, SweepOutcome};
