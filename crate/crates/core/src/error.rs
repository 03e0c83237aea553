use std::path::PathBuf;

/// Errors produced anywhere in the crate.
#[derive(Debug, thiserror::Error)]
pub enum PuError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error(
        "calibration failed: no sign change in bracket [{lo}, {hi}] after {doublings} doublings"
    )]
    Calibration { lo: f64, hi: f64, doublings: u32 },

    #[error("labeling error: {0}")]
    Labeling(String),

    #[error("degenerate stratum: {0}")]
    DegenerateStratum(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("EM objective decreased at iteration {iteration}: {previous} -> {current}")]
    MonotonicityViolation {
        iteration: usize,
        previous: f64,
        current: f64,
    },

    #[error("malformed data in {path:?}: {reason}")]
    Format {
        path: Option<PathBuf>,
        reason: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, PuError>;

pub(crate) fn domain(msg: impl Into<String>) -> PuError {
    PuError::Domain(msg.into())
}
