use thiserror::Error;

/// Errors raised by the geometric and statistical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("points are antipodal; the minimizing great circle is not unique")]
    AntipodalPoints,
    #[error("arc endpoints coincide or are antipodal")]
    DegenerateEndpoints,
    #[error("parameter {value} outside the open domain ({lo}, {hi})")]
    OutOfDomain { value: f64, lo: f64, hi: f64 },
    #[error("initial velocity is zero")]
    ZeroVelocity,
    #[error("initial speed {0} exceeds pi")]
    SpeedTooLarge(f64),
    #[error("curve needs at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("need at least {needed} curves, got {got}")]
    TooFewCurves { needed: usize, got: usize },
    #[error("tangent elements live at different base points or grids")]
    BaseMismatch,
    #[error("grid sizes differ: {0} vs {1}")]
    GridMismatch(usize, usize),
    #[error("invalid warping function: {0}")]
    InvalidWarping(String),
    #[error("covariance is not positive semi-definite (min eigenvalue {0})")]
    NotPsd(f64),
    #[error("zero vector cannot be normalized onto the sphere")]
    ZeroVector,
    #[error("invalid option: {0}")]
    InvalidOption(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
