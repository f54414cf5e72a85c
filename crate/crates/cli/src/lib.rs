//! Command-line driver: configuration, dispatch and run directories.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::{Command, Layers, RunConfig};
pub use error::CliError;
