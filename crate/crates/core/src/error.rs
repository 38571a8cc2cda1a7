use thiserror::Error;

/// Errors raised by model construction, certificate checks and oracles.
#[derive(Debug, Error)]
pub enum Error {
    #[error("site index {index} out of range for {len} sites")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("geometry has no lattice coordinates")]
    NoCoordinates,

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("matrix is not strictly diagonally dominant")]
    NotDiagonallyDominant,

    #[error("Neumann contraction constant {0} is not below 1")]
    NoContraction(f64),

    #[error("certificate unavailable: {0}")]
    CertificateUnavailable(String),

    #[error("conjugate gradient did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("box half-width {half_width} too small: mass outside box {mass:e}")]
    BoxTooSmall { half_width: f64, mass: f64 },

    #[error("sampler error: {0}")]
    Sampler(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
