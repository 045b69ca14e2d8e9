use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("truncation must be at least {min}, got {got}")]
    Truncation { min: usize, got: usize },
    #[error("derivative-norm variant is only defined for beta = 1, got beta = {0}")]
    DerivativeVariantBeta(f64),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("vectors belong to different spaces")]
    SpaceMismatch,
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("symbol needs at least {needed} coefficients, got {got}")]
    InsufficientSymbol { needed: usize, got: usize },
    #[error("direct sums are only formed from unweighted (beta = 0) spaces")]
    WeightedDirectSum,
    #[error("eigenvalue iteration did not converge for a {0}x{0} matrix")]
    NonConvergence(usize),
    #[error("ladder needs at least {min} strictly increasing sizes, got {got:?}")]
    Ladder { min: usize, got: Vec<usize> },
    #[error("pair does not commute: relative commutator norm {0:e}")]
    NonCommuting(f64),
    #[error("lambda grid is empty")]
    EmptyGrid,
    #[error("lambda = {re} + {im}i is not inside the open annulus of r = {r}")]
    OutsideAnnulus { r: f64, re: f64, im: f64 },
    #[error("sampling failed: {0}")]
    Sampling(String),
    #[error("malformed operator file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
