use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("size guard exceeded: {0}")]
    GuardExceeded(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("norm drift {drift:e} exceeded tolerance {tolerance:e}; reduce the time step")]
    NormDrift { drift: f64, tolerance: f64 },

    #[error("density-matrix positivity violated: min eigenvalue {min_eig:e}")]
    PositivityViolation { min_eig: f64 },

    #[error("empty shot record")]
    EmptyRecord,

    #[error("non-uniform sampling: {0}")]
    NonUniformSampling(String),

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("self-consistency did not converge: {0}")]
    NonConverged(String),
}

pub type Result<T> = std::result::Result<T, Error>;
