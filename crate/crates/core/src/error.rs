use thiserror::Error;

/// Errors raised by targets, direction sampling, the round executor and the
/// samplers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite input at coordinate {index}")]
    NonFiniteInput { index: usize },

    #[error("unsupported operation: {0}")]
    Unsupported(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite potential at perturbed point along direction {direction}")]
    NonFiniteDirection { direction: usize },

    #[error("non-finite potential at base point")]
    NonFiniteBase,

    #[error("iterate diverged at step {step}: norm {norm:e}")]
    Diverged { step: usize, norm: f64 },

    #[error("singular matrix (pivot magnitude {pivot:e})")]
    Singular { pivot: f64 },

    #[error("trajectory too short: need at least {needed} states, have {have}")]
    TooShort { needed: usize, have: usize },

    #[error("undefined ratio: {0}")]
    Undefined(&'static str),

    #[error("kernel failed at iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

pub(crate) fn check_finite(x: &[f64]) -> Result<()> {
    match x.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFiniteInput { index }),
        None => Ok(()),
    }
}
