use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("CFL number {cfl:.4} violates the stability bound (< 1)")]
    CflViolation { cfl: f64 },

    #[error("forward solve diverged at (k={k}, i={i}, j={j})")]
    Divergence { k: usize, i: usize, j: usize },

    #[error("non-finite {what} at (k={k}, i={i}, j={j})")]
    NonFinite {
        what: &'static str,
        k: usize,
        i: usize,
        j: usize,
    },

    #[error("non-finite gradient entry {index}")]
    NonFiniteGradient { index: usize },

    #[error("expected {expected} values, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },

    #[error("restriction window out of bounds: {0}")]
    WindowOutOfBounds(String),

    #[error("time step mismatch: big mesh tau={big}, inverse mesh tau={small}")]
    TimeStepMismatch { big: f64, small: f64 },

    #[error("reference field is identically zero")]
    ZeroReference,

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("optimizer failed at step {step}: {source}")]
    Optimizer {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("all {0} sample paths failed")]
    AllPathsFailed(usize),

    #[error("bad field file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("check failed: {0}")]
    CheckFailed(String),

    #[error("manifest mismatch: {0}")]
    Manifest(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Configuration problems exit with status 2, everything else with 1.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::InvalidMesh(_)
                | Error::CflViolation { .. }
                | Error::UnknownExperiment(_)
        )
    }
}
