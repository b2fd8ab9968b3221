use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("point {x} lies outside the domain {{1..{n}}}")]
    PointOutOfRange { x: usize, n: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("sample is empty")]
    EmptySample,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("sample is not realizable by a threshold: {0}")]
    NotRealizable(String),
    #[error("invalid probability weights: {0}")]
    InvalidWeights(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("no posterior registered for sample {0}")]
    UnknownSample(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
