use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("bandwidth must be positive, got {0}")]
    NonPositiveBandwidth(f64),

    #[error("row {0} of the zeroed-out affinity matrix has no mass")]
    DegenerateRow(usize),

    #[error("shape mismatch: {0}x{1} vs {2}x{3}")]
    ShapeMismatch(usize, usize, usize, usize),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("eigendecomposition did not converge")]
    NoConvergence,

    #[error("spectral parameter must lie in the upper half plane, got Im z = {0}")]
    NotUpperHalfPlane(f64),

    #[error("empty grid")]
    EmptyGrid,

    #[error("signal strength {lambda} is at or below the detection threshold {threshold}")]
    BelowThreshold { lambda: f64, threshold: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed input: {msg}")]
    Parse { path: PathBuf, msg: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}
