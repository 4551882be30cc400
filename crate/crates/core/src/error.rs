use thiserror::Error;

/// Errors raised by the numerical kernels and the verifier.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GpiError {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Cholesky elimination met a pivot at or below the positive-definiteness threshold.
    #[error("matrix is not positive definite (pivot {pivot:.3e} at row {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    /// A block or Schur complement that must be inverted is singular.
    #[error("singular matrix: {0}")]
    Singular(String),

    /// An iterative method failed to converge.
    #[error("numeric error: {message} (last partial value {partial:e})")]
    Numeric { message: String, partial: f64 },

    /// The requested method cannot handle this input shape.
    #[error("capability error: {0}")]
    Capability(String),

    /// A configured size limit was exceeded.
    #[error("limit exceeded: {0}")]
    Limit(String),

    /// Two algebraically equivalent routes disagreed beyond tolerance.
    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl GpiError {
    pub(crate) fn numeric(message: impl Into<String>, partial: f64) -> Self {
        GpiError::Numeric {
            message: message.into(),
            partial,
        }
    }

    /// Capability and limit errors mean "try another method" rather than "the input is bad".
    pub fn is_capability(&self) -> bool {
        matches!(self, GpiError::Capability(_) | GpiError::Limit(_))
    }
}

impl From<std::io::Error> for GpiError {
    fn from(e: std::io::Error) -> Self {
        GpiError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for GpiError {
    fn from(e: serde_json::Error) -> Self {
        GpiError::Invalid(e.to_string())
    }
}

impl From<csv::Error> for GpiError {
    fn from(e: csv::Error) -> Self {
        GpiError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, GpiError>;
