use thiserror::Error;

/// Errors shared by every module of the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Argument outside the domain of the operation (negative radius, bad grid size...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Symbol family parameters outside their admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A documented precondition of the operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Adaptive quadrature could not reach the requested tolerance.
    #[error("tolerance not met: estimate {estimate:e} with error {achieved:e} (requested {requested:e})")]
    Tolerance {
        estimate: f64,
        achieved: f64,
        requested: f64,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("zero field: {0}")]
    ZeroField(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
