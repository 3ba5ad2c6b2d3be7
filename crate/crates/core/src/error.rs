use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Obj {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("invalid mesh `{name}`: {msg}")]
    InvalidMesh { name: String, msg: String },
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[cfg(feature = "png")]
    #[error("image: {0}")]
    Image(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
