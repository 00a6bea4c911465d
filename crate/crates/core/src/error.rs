use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Layer or network wiring does not match the data flowing through it.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Input(String),

    /// An operation was called in the wrong lifecycle state (e.g. backward before forward).
    #[error("state error: {0}")]
    State(String),

    #[error("non-finite value produced in {0}")]
    NonFinite(String),

    #[error("format error in {path}: {msg} (byte offset {offset})")]
    Format {
        path: PathBuf,
        offset: u64,
        msg: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
