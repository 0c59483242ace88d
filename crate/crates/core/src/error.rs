//! Error type shared across the pipeline.

use std::io;

/// Pipeline errors, grouped by the process exit code they map to.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid or inconsistent configuration (exit code 1).
    #[error("config error: {0}")]
    Config(String),

    /// Malformed, missing or degenerate data (exit code 2).
    #[error("data error: {0}")]
    Data(String),

    /// A fitted model cannot be used as requested (exit code 2).
    #[error("model error: {0}")]
    Model(String),

    /// I/O failure, reported with the input identity (exit code 2).
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },

    /// A state the pipeline should never reach (exit code 3).
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub fn io(path: impl Into<String>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Exit code convention: 1 usage/config, 2 data, 3 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Data(_) | Error::Model(_) | Error::Io { .. } => 2,
            Error::Internal(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
