use std::path::PathBuf;

use thiserror::Error;

/// Failure of a CLI command. Each variant maps onto a documented exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Validation { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("run diverged: {0}")]
    Divergence(#[source] advgd_core::RunError),
}

impl CliError {
    pub fn validation(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        CliError::Validation {
            path: path.into(),
            message: message.to_string(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation { .. } | CliError::Io { .. } => 2,
            CliError::Divergence(_) => 3,
        }
    }
}
