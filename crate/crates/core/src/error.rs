use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Input data failed validation (bad category code, shape mismatch, non-finite value).
    #[error("validation failed: {0}")]
    Validation(String),

    /// Sufficient statistics and prior family do not fit together.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Conditioning on an event that has zero probability under the prior.
    #[error("conditioning on a null event: {0}")]
    NullEvent(String),

    /// A parameter lies outside the domain where a bound is valid.
    #[error("domain error: {0}")]
    Domain(String),

    /// Requested enumeration exceeds the configured cap.
    #[error("enumeration too large: {0}")]
    Resource(String),

    /// Operation not defined for this pair of prior families.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Coordinate descent did not reach the KKT tolerance.
    #[error("lasso did not converge after {sweeps} sweeps (KKT residual {residual:e})")]
    Convergence { sweeps: usize, residual: f64 },

    /// Dataset could not be read.
    #[error("ingestion failed at row {row}, column {column}: {message}")]
    Ingestion {
        row: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
