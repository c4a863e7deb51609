//! Experiment runner: parses a configuration, runs one experiment and
//! writes CSV and JSON artifacts with a checksummed manifest.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::{parse_config, BareParams, Experiment, ExperimentConfig, PovmConfig};
pub use error::CliError;
pub use output::{FileEntry, OutputDir};
pub use run::{run_experiment, RunManifest};
