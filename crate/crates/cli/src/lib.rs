//! Command-line driver: configuration, artifact manifest and the pipeline
//! stages behind the `scribe` binary.

pub mod config;
pub mod manifest;
pub mod stages;

pub use config::ExperimentConfig;
pub use stages::{conditions, Condition, StageError};
