use std::path::PathBuf;

/// Errors produced by every fallible operation in this crate.
///
/// Each variant maps to a stable machine-readable code via [`Error::code`],
/// which the command-line tool prints alongside the human message.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("key grid mismatch: key is {key_h}x{key_w}, expected {want_h}x{want_w}")]
    Grid {
        key_h: usize,
        key_w: usize,
        want_h: usize,
        want_w: usize,
    },

    #[error("invalid key: {0}")]
    Key(String),

    #[error("model layer {layer}: {msg}")]
    Model { layer: usize, msg: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Shape(_) => "shape",
            Error::Param(_) => "param",
            Error::Grid { .. } => "grid",
            Error::Key(_) => "key",
            Error::Model { .. } => "model",
            Error::Format(_) => "format",
            Error::Integrity(_) => "integrity",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn model(layer: usize, msg: impl Into<String>) -> Self {
        Error::Model { layer, msg: msg.into() }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
