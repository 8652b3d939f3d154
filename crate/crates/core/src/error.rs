use core::fmt;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Vector or point dimensions do not agree.
    DimensionMismatch { expected: usize, got: usize },
    /// An operation received fewer samples than its contract requires.
    InsufficientData { needed: usize, got: usize },
    /// A matrix that must be inverted is singular (or nearly so).
    SingularMatrix,
    /// A documented precondition was violated by the caller.
    Contract(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::InsufficientData { needed, got } => {
                write!(f, "insufficient data: needed {needed} samples, got {got}")
            }
            Error::SingularMatrix => write!(f, "singular innovation covariance"),
            Error::Contract(msg) => write!(f, "contract violation: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
