use num_bigint::BigInt;
use thiserror::Error;

/// Errors raised by the number-theoretic engine.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{0} is not a valid real quadratic discriminant (need D > 0, D = 0 or 1 mod 4, D not a square)")]
    InvalidDiscriminant(BigInt),

    #[error("denominator must be nonzero")]
    ZeroDenominator,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("digit word must be nonempty")]
    EmptyWord,

    #[error("primality of {0} is outside the deterministic range of this implementation")]
    PrimalityBound(BigInt),

    /// Two independent computations disagreed. Never reconciled silently.
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
