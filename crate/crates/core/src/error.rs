use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not positive semidefinite: eigenvalue {min_eig:e} below -{tol:e}")]
    NotPsd { min_eig: f64, tol: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("fractional power needs a positive exponent, got {0}")]
    BadExponent(f64),

    #[error("matrix is singular at tolerance (lambda_min {lambda_min:e}, cutoff {cutoff:e})")]
    NotDefinite { lambda_min: f64, cutoff: f64 },

    #[error("invalid schedule: {0}")]
    ScheduleInvalid(String),

    #[error("not a contraction: spectrum [{min:e}, {max:e}] leaves [0, 1]")]
    NotContraction { min: f64, max: f64 },

    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),

    #[error("routes disagree beyond {threshold:e}: {residuals:?}")]
    RouteDisagreement {
        residuals: Vec<(String, f64)>,
        threshold: f64,
    },

    #[error("infeasible ensemble spec: {0}")]
    InfeasibleSpec(String),

    #[error("exact oracle does not support this input: {0}")]
    OracleUnsupported(String),

    #[error("invalid tolerance policy: {0}")]
    InvalidPolicy(String),

    #[error("parse error: {0}")]
    Parse(String),
}
