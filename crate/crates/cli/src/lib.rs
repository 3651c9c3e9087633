//! Command-line driver for the fslm simulator: JSON configuration, command
//! dispatch, and deterministic output files.

pub mod config;
pub mod output;
pub mod run;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Runtime(_) => 3,
        }
    }
}

impl From<fslm::Error> for CliError {
    fn from(e: fslm::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}

pub use config::{parse_config, Command, Format, RunConfig};
pub use run::{run, RunOptions, RunSummary};
