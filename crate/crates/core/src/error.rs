//! Error types shared across the crate.

use thiserror::Error;

/// Convenience alias used by every fallible operation in this crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Unified error type.
///
/// The variants are grouped by how a caller should react: `Io`/`Parse` mean
/// the input could not be read at all, `Dimension`/`Validation` mean the
/// caller handed us inconsistent data, and `Model`/`OrderExceedsSlice` mean
/// the request is outside what the method can answer (for example asking to
/// lift a moment of order d through a slice of dimension m < d).
#[derive(Debug, Error)]
pub enum Error {
    /// Mismatched or out-of-range dimensions (vector lengths, matrix shapes).
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Structurally well-formed input that violates a domain rule
    /// (non-positive width, non-finite coordinate, bad weight, ...).
    #[error("invalid input: {0}")]
    Validation(String),

    /// A request outside the identifiable regime of the model.
    #[error("model violation: {0}")]
    Model(String),

    /// Moment order d exceeds the slice dimension m; such moments are not
    /// determined by projection data and we refuse to guess.
    #[error("moment order d = {d} exceeds slice dimension m = {m}; lifting requires d <= m")]
    OrderExceedsSlice { d: usize, m: usize },

    /// Deterministic quadrature is only implemented for SO(2) and SO(3).
    #[error("no quadrature rule for SO({n}); supported ambient dimensions are 2 and 3")]
    UnsupportedGroup { n: usize },

    /// Filesystem failure, annotated with the offending path.
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Malformed JSON, annotated with the offending path.
    #[error("{path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn model(msg: impl Into<String>) -> Self {
        Error::Model(msg.into())
    }
}
