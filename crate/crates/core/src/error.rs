use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal residual {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("epsilon {eps} outside admissible range: {reason}")]
    OutOfRange { eps: f64, reason: String },

    #[error("retry budget of {budget} exhausted in {stage}; best attempt {best:e} vs target {target:e}")]
    RetryExhausted {
        stage: &'static str,
        budget: usize,
        best: f64,
        target: f64,
    },

    #[error("witness inconsistent with target: max deviation {deviation:e}")]
    InconsistentWitness { deviation: f64 },

    #[error("compression discarded mass {residual:e} on factor {factor}")]
    CompressionResidual { factor: usize, residual: f64 },

    #[error("verification failed: {0}")]
    Verification(String),
}

pub type Result<T> = std::result::Result<T, Error>;
