use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("non-finite {what} at point {point:?}")]
    NonFinite { what: String, point: Vec<f64> },

    #[error("non-physical {what} at point {point:?}")]
    NonPhysical { what: String, point: Vec<f64> },

    #[error("training diverged at iteration {iteration} (loss = {loss})")]
    Divergence { iteration: usize, loss: f64 },

    #[error("CFL violation: dt = {dt} exceeds stable limit {limit}")]
    Cfl { dt: f64, limit: f64 },

    #[error("empty point set")]
    EmptySet,

    #[error("polyline is open; area is undefined")]
    OpenPolyline,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
