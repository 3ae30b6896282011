use std::path::{Path, PathBuf};

use thiserror::Error;

/// Errors of the std layer, classified by the exit code they map to.
#[derive(Debug, Error)]
pub enum Error {
    /// Bad flags or flag combinations.
    #[error("{0}")]
    Usage(String),
    /// Input that parses but violates the data contracts.
    #[error("{0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Runtime(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            Error::Validation(_) | Error::Parse { .. } => 3,
            Error::Io { .. } | Error::Runtime(_) => 4,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn parse(path: &Path, message: impl ToString) -> Self {
        Error::Parse {
            path: path.to_path_buf(),
            message: message.to_string(),
        }
    }
}

impl From<nightcast_core::Error> for Error {
    fn from(e: nightcast_core::Error) -> Self {
        match e {
            nightcast_core::Error::Config(m) => Error::Usage(m),
            other => Error::Validation(other.to_string()),
        }
    }
}
