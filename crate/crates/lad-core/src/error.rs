//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, LadError>;

/// Errors produced by LaD operations.
///
/// The variants are grouped by how a front end should report them: `Io`,
/// `Format` and `Validation` indicate bad inputs, `Numerical` indicates a
/// computation that failed on otherwise well-formed inputs.
#[derive(Debug, Error)]
pub enum LadError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Structural problems in an input file (ragged rows, bad JSON, ...).
    #[error("format error: {0}")]
    Format(String),

    /// Inputs that violate a documented invariant or precondition.
    #[error("validation error: {0}")]
    Validation(String),

    /// Numerical failures (e.g. Cholesky factorization after jitter).
    #[error("numerical error: {0}")]
    Numerical(String),
}

impl LadError {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        LadError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors that indicate invalid input rather than a numerical
    /// failure; used by front ends to pick an exit code.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, LadError::Numerical(_))
    }
}
