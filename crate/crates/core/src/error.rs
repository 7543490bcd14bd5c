use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input too short: need at least {needed} samples, got {got}")]
    Length { needed: usize, got: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("degenerate transfer function at bin {bin} (|h1| = {magnitude:e})")]
    DegenerateTransfer { bin: usize, magnitude: f64 },

    #[error("cannot encode a zero-valued relative transfer function at bin {bin}")]
    ZeroEncode { bin: usize },

    #[error("azimuth {0} deg is not on the grid")]
    NotOnGrid(f64),

    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    #[error("RT60 of {rt60} s is infeasible for this room (absorption {absorption:.3} >= 1)")]
    Infeasible { rt60: f64, absorption: f64 },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("payload length mismatch: header implies {expected} values, found {found}")]
    PayloadLength { expected: usize, found: usize },

    #[error("{0}")]
    Empty(&'static str),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("WAV error: {0}")]
    Wav(#[from] hound::Error),
}

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the filesystem rather than of the data.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io { .. } => true,
            Error::Wav(hound::Error::IoError(_)) => true,
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
