use std::fmt;

/// Crate-wide error type.
#[derive(Debug)]
pub enum Error {
    /// Input violates a documented precondition (bad simplex point,
    /// divisibility requirement, non-concave rule, ...).
    Validation(String),
    /// Outcome arity of two arguments does not match.
    ArityMismatch { expected: usize, got: usize },
    /// The LP solver stopped without certifying optimality.
    Solver(String),
    Io(std::io::Error),
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Validation(msg) => write!(f, "validation error: {msg}"),
            Error::ArityMismatch { expected, got } => {
                write!(f, "arity mismatch: expected {expected} outcomes, got {got}")
            }
            Error::Solver(msg) => write!(f, "solver error: {msg}"),
            Error::Io(e) => write!(f, "io error: {e}"),
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
