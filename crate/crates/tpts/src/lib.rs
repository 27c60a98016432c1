//! Command-line front end for the TPTS rectifier modulation engine: config
//! loading, trace and report output, and the `simulate`, `compare`, `sweep`
//! and `selftest` commands.

pub mod commands;
pub mod config;
pub mod output;
pub mod selftest;

pub use commands::CliError;
pub use config::{load, parse_config, ConfigError, RunConfig};
