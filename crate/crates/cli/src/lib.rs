//! Experiment runner for low-rank sparse subspace clustering.

pub mod config;
pub mod error;
pub mod experiment;
pub mod tools;

pub use config::ExperimentConfig;
pub use error::{Category, CliError, CliResult};
pub use experiment::{cmd_grid, cmd_run, RunOptions};
pub use tools::{cmd_compare, cmd_prox_curve, cmd_synth};
