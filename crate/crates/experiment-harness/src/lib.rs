//! Configured pipelines behind the `annealtherm` command.

pub mod config;
mod error;
pub mod experiments;
pub mod output;
pub mod samples;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
