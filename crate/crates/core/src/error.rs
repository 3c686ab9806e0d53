use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by every stage of the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{stage} did not converge within {iterations} iterations (last residual {residual:e})")]
    Convergence {
        stage: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("relaxation became unstable at step {step}: sup |u| = {sup_norm:e} exceeds {limit:e}")]
    Instability {
        step: usize,
        sup_norm: f64,
        limit: f64,
    },

    #[error("point ({x:.6}, {y:.6}, {z:.6}) lies outside the evaluable domain")]
    Domain { x: f64, y: f64, z: f64 },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("schedule violates the strip condition sqrt(2) sin psi1 < sin psi2 at R = {radius}: sqrt(2) sin psi1 = {lhs:.6e}, sin psi2 = {rhs:.6e}")]
    ScheduleViolation { radius: f64, lhs: f64, rhs: f64 },

    #[error("interface extraction failed for pair ({i}, {j}): {reason}")]
    Extraction { i: usize, j: usize, reason: String },

    #[error("no balance: actions ({0}, {1}, {2}) violate the strict triangle inequality")]
    NoBalance(f64, f64, f64),

    #[error("missing upstream artifact {}: run `{stage}` first", path.display())]
    Dependency { path: PathBuf, stage: &'static str },

    #[error("refusing to overwrite {} (pass --force)", .0.display())]
    WouldOverwrite(PathBuf),

    #[error("malformed file {}: {reason}", path.display())]
    Format { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
