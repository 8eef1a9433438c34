//! Experiment runner for the `advgd` simulator: JSON configs, replicated
//! runs, adversary-count sweeps, admissibility checks and SVG plots.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;
pub mod output;
pub mod plot;
pub mod presets;

pub use commands::{cmd_check, cmd_plot, cmd_run, cmd_sweep};
pub use config::{ExperimentConfig, Overrides};
pub use error::CliError;
