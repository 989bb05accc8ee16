//! Command-line driver for the concomitant solvers: simulation, single fits,
//! regularization paths and the benchmark experiments.

pub mod args;
pub mod commands;
pub mod config;

pub use args::Cli;
pub use commands::{best_by_test, run, run_rmse, run_roc, run_trials, Outcome, UsageError};
pub use config::{ExperimentConfig, ExperimentKind};

/// Process exit statuses.
pub mod exit {
    pub const SUCCESS: u8 = 0;
    pub const FAILURE: u8 = 1;
    pub const USAGE: u8 = 2;
    /// Outputs were written but some fit did not reach the tolerance.
    pub const UNCONVERGED: u8 = 3;
}
