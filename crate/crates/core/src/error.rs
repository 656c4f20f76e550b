use thiserror::Error;

/// Errors produced by the numerical and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Quadrature did not reach the requested tolerance within the panel cap.
    /// `best` is the finest estimate obtained.
    #[error("quadrature failed to converge: best estimate {best:e}, error estimate {error:e} with {panels} panels")]
    Accuracy { best: f64, error: f64, panels: usize },

    #[error("trajectory {trajectory} diverged at step {step}")]
    Divergence { trajectory: u64, step: u64 },

    #[error("drift direction undefined for a zero vector")]
    UndefinedDirection,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}
