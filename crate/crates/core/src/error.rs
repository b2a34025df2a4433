use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("map is not trace preserving (deviation {deviation:e})")]
    NotTracePreserving { deviation: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("propagation unstable at step {step}: propagator norm {norm:e}")]
    Unstable { step: usize, norm: f64 },

    #[error("negative g sample {value:e} at t = {time}")]
    NegativeG { time: f64, value: f64 },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("unphysical covariance matrix: {0}")]
    Unphysical(String),

    #[error("horizon {horizon} exceeds bath recurrence time {recurrence}; need at least {required_modes} modes")]
    Recurrence {
        horizon: f64,
        recurrence: f64,
        required_modes: usize,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
