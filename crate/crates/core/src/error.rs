use std::path::PathBuf;

use thiserror::Error;

use crate::integrator::IntegrationFailure;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or configuration field is out of its admissible range.
    #[error("invalid `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    /// A state vector does not match the truncation size of the system it is used with.
    #[error("state length {found} does not match truncation size {expected}")]
    LengthMismatch { expected: usize, found: usize },

    /// Time integration aborted; the partial trajectory is carried along.
    #[error(transparent)]
    Integration(Box<IntegrationFailure>),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. } | Error::LengthMismatch { .. } | Error::Json(_)
        )
    }
}

impl From<IntegrationFailure> for Error {
    fn from(f: IntegrationFailure) -> Self {
        Error::Integration(Box::new(f))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
