//! Experiment driver: trials, ablations, noise sweeps and segmentation dumps
//! configured from a TOML file.

pub mod commands;
pub mod config;
pub mod report;

pub use commands::{cmd_ablate, cmd_export_assets, cmd_noise_sweep, cmd_run, cmd_segment, CliError, Flags};
pub use config::{AblationMode, RunConfig};
