//! Command implementations behind the `failscope` binary.

pub mod commands;
pub mod config;
pub mod dataset;

use failscope::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration or unreadable input; exit code 2.
    #[error("{0}")]
    Config(String),
    /// Failure while running; exit code 3.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    pub fn config(e: impl std::fmt::Display) -> Self {
        CliError::Config(e.to_string())
    }

    pub fn runtime(e: impl std::fmt::Display) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Errors that describe bad input map to config errors, the rest to runtime.
impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_)
            | Error::Unknown { .. }
            | Error::InvalidInput(_)
            | Error::InvalidSpace(_)
            | Error::SpaceMismatch(_)
            | Error::TooManyVariables(_) => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
