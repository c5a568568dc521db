//! Experiment harness around the persistent-training core: configuration
//! files, synthetic datasets, run directories, and analysis passes.

pub mod config;
pub mod data;
pub mod error;
pub mod kink;
pub mod compare;
pub mod runner;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
