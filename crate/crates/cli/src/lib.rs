//! Configuration-driven front end: experiment configs, the driver corpus and artifact output.

pub mod config;
pub mod corpus;
pub mod error;
pub mod runner;
pub mod svg;

pub use config::{Experiment, ExperimentConfig, SeedSpec};
pub use error::{CliError, CliResult};
pub use runner::{exit_code, run_config, run_file, Check, RunOptions, RunOutcome};
