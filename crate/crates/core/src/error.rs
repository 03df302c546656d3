use thiserror::Error;

/// Errors produced by the smoothing library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix contains non-finite entries")]
    InvalidMatrix,
    #[error("matrix is not positive definite (min eigenvalue {min_eig:e}, floor {floor:e})")]
    NotPositiveDefinite { min_eig: f64, floor: f64 },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },
    #[error("bad dimension for {function}: {reason}")]
    BadDimension { function: String, reason: String },
    #[error("unknown benchmark function `{0}`")]
    UnknownFunction(String),
    #[error("tensor quadrature supports dim <= {max}, got {dim}")]
    DimTooLarge { dim: usize, max: usize },
    #[error("quadrature order must be at least {min}, got {order}")]
    BadOrder { order: usize, min: usize },
    #[error("schedule is empty")]
    EmptySchedule,
    #[error("step size must be positive, got {0}")]
    BadStep(f64),
    #[error("non-finite gradient at iteration {t}")]
    NonFiniteGradient { t: u64 },
    #[error("zero denominator in adaptive step at coordinate {coordinate}")]
    DegenerateDenominator { coordinate: usize },
    #[error("covariance adaptation failed: {0}")]
    AdaptationFailed(String),
    #[error("invalid spectrum bounds: floor {floor} > cap {cap}")]
    BadBounds { floor: f64, cap: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
