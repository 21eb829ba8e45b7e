//! Batch front end: configuration parsing, subcommand pipelines and
//! reproducible CSV output.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{run_subcommand, RunError, RunSummary, SimModel, Subcommand};
pub use config::{parse_config, ConfigError, RunConfig};
