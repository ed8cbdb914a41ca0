//! Experiment runner for the `asel` algorithm selection toolkit.

pub mod commands;
pub mod config;
pub mod data;
pub mod error;
pub mod format;

pub use commands::{cmd_export_heatmap, cmd_run, cmd_validate, HeatmapKind, Overrides};
pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
