use std::fmt::Display;

use thiserror::Error;

/// Failures of a run, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("physics check failed: {0}")]
    Physics(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn config(e: impl Display) -> Self {
        CliError::Config(e.to_string())
    }

    pub fn physics(e: impl Display) -> Self {
        CliError::Physics(e.to_string())
    }

    /// 2 for configuration errors, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Physics(_) | CliError::Io(_) => 1,
        }
    }
}
