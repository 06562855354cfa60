use thiserror::Error;

/// Errors raised by model construction, evaluation and fitting.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular correlation matrix: {0}")]
    SingularMatrix(String),

    #[error("quadrature did not converge (achieved error {achieved:.3e}, target {target:.3e})")]
    Quadrature { achieved: f64, target: f64 },

    #[error("root bracketing failed: {0}")]
    RootBracket(String),

    #[error("non-finite likelihood contribution at replicate {replicate} ({case})")]
    NonFiniteContribution { replicate: usize, case: &'static str },

    #[error("underflow: {0}")]
    Underflow(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("optimisation failed: {0}")]
    Optimisation(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
