use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
#[non_exhaustive]
pub enum Error {
    #[error("time must be positive and finite, got {0}")]
    NonPositiveTime(f64),

    #[error("times must be non-empty and strictly increasing")]
    NonIncreasingTimes,

    #[error("order mismatch: expected {expected}, found {found}")]
    OrderMismatch { expected: usize, found: usize },

    #[error("state vector contains a non-finite entry")]
    NonFinite,

    /// The product of transfer functions decays too slowly to be integrated
    /// along the real line.
    #[error("spectral product is not integrable (denominator exceeds numerator by {0})")]
    NotIntegrable(usize),

    #[error("repeated pole at {0}+1/2; only simple poles are supported")]
    RepeatedPole(u32),

    #[error("matrix is singular")]
    Singular,

    #[error("matrix is not numerically positive definite")]
    NotPositiveDefinite,

    #[error("invalid Monte Carlo configuration: {0}")]
    InvalidConfig(&'static str),
}
