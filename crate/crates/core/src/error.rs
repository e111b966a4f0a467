use thiserror::Error;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("measure weight {value:e} at grid index {index} is negative; refine the grid")]
    NegativeMeasure { index: usize, value: f64 },

    #[error("certificate refused: {reason}")]
    Refused { reason: String, locus: Vec<f64> },

    #[error("insufficient signal: {usable} usable points, need {required}")]
    InsufficientSignal { usable: usize, required: usize },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
}

pub type Result<T> = std::result::Result<T, Error>;
