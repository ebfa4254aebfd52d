//! Experiment runner around the `mixsim` library: named presets mirroring
//! the reference outage/rate studies, a line-oriented `key = value` config
//! format, CSV emission, and a run manifest.
//!
//! Everything the binary does is reachable through this library so the
//! pipeline can be driven (and tested) in-process.

pub mod config;
pub mod csv;
pub mod manifest;
pub mod presets;
pub mod runner;

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, bad config file, or unknown preset.
    Config(String),
    /// Filesystem failure while writing outputs.
    Io(String),
    /// Failure inside the simulation engine.
    Engine(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {}", m),
            CliError::Io(m) => write!(f, "io error: {}", m),
            CliError::Engine(m) => write!(f, "engine error: {}", m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
