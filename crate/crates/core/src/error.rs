use thiserror::Error;

use crate::gainopt::OptimizationTrace;
use crate::model::Violation;

/// Errors raised by the estimation and information routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} is not positive definite")]
    NotPositiveDefinite { what: &'static str },

    #[error("{what} is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { what: &'static str, asymmetry: f64 },

    #[error("dimension mismatch in {what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: String,
        actual: String,
    },

    #[error("invalid model: {}", join_violations(.0))]
    InvalidModel(Vec<Violation>),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("Renyi order must be positive and away from 1, got {0}")]
    InvalidOrder(f64),

    #[error("invalid optimizer settings: {0}")]
    InvalidSettings(&'static str),

    #[error("gain ascent did not converge after {} iterations (gradient norm {:e})", .0.iterations, .0.final_gradient_norm)]
    DidNotConverge(Box<OptimizationTrace>),

    #[error("gain is not stationary (gradient norm {gradient_norm:e} > {tolerance:e})")]
    NotStationary { gradient_norm: f64, tolerance: f64 },
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dims(rows: usize, cols: usize) -> String {
    format!("{rows}x{cols}")
}
