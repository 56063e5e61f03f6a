use thiserror::Error;

/// Errors produced by the library.
///
/// The CLI maps [`Error::is_budget`] errors to exit code 3 and everything
/// else to exit code 2.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("h unavailable: set cubic_nonsingular or supply h")]
    HUnavailable,

    #[error("{what} too large: {size} exceeds cap {cap}")]
    TooLarge { what: &'static str, size: u128, cap: u64 },

    #[error("quadrature did not converge after {levels} refinements (last change {last_change:e})")]
    NoConvergence { levels: u32, last_change: f64 },

    #[error("integer overflow risk: {0}")]
    Overflow(String),

    #[error("requires diagonal Q")]
    NonDiagonal,

    #[error("insufficient nonzero counts: {0}")]
    InsufficientData(String),

    #[error("search budget exceeded: {0}")]
    Budget(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    /// True for cap/budget errors (as opposed to malformed input).
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::TooLarge { .. } | Error::Budget(_) | Error::Overflow(_) | Error::NoConvergence { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Fails with [`Error::TooLarge`] when `size > cap`.
pub(crate) fn check_cap(what: &'static str, size: u128, cap: u64) -> Result<()> {
    if size > cap as u128 {
        return Err(Error::TooLarge { what, size, cap });
    }
    Ok(())
}
