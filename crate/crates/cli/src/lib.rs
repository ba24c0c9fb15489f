//! Command-line runtime of the formsense pipeline: configuration, the
//! `generate`, `train`, `evaluate`, `diagnose`, `watch` and `export-plots`
//! commands, and streaming session metrics.

pub mod commands;
pub mod config;
pub mod error;

pub use config::PipelineConfig;
pub use error::{CliError, Result};
