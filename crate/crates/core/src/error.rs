use std::path::PathBuf;

use crate::dataset::format::FormatError;

/// Errors produced by the solver, harness, and dataset pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("diffusion matrix is not symmetric positive definite at node ({i}, {j}): d11={d11}, d12={d12}, d22={d22}")]
    NotPositiveDefinite {
        i: usize,
        j: usize,
        d11: f64,
        d12: f64,
        d22: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("stencil index ({i}, {j}) is outside the interior 1..={max}")]
    OutsideInterior { i: usize, j: usize, max: usize },

    #[error("non-finite value in term `{term}` at node ({i}, {j})")]
    NonFinite {
        i: usize,
        j: usize,
        term: &'static str,
    },

    #[error("non-finite stage value in {stage} (dt = {dt:e})")]
    StepFailed { stage: &'static str, dt: f64 },

    #[error(
        "time step underflow at t = {t}: dt = {dt:e} fell below {dt_min:e} (solution blowing up?)"
    )]
    StepUnderflow { t: f64, dt: f64, dt_min: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-positive error norm passed to convergence rate: {0}")]
    NonPositiveError(f64),

    #[error("dataset generation aborted: {failed} of {total} samples failed")]
    TooManyFailures { failed: usize, total: usize },

    #[error("fixture {path:?}: {message}")]
    Fixture { path: PathBuf, message: String },

    #[error(transparent)]
    Format(#[from] FormatError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
