//! Experiment harness for hyperplane-arrangement walks: config parsing,
//! custom arrangement files, parallel Monte Carlo and CSV output.

pub mod config;
pub mod format;
pub mod parallel;
pub mod run;

pub use config::{ConfigError, ExperimentConfig, Mode};
pub use run::{list_families, run_experiment, write_experiment, RunError};
