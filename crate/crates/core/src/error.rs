use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("need more than k={k} samples, got {n}")]
    InsufficientSamples { n: usize, k: usize },

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("track {0} is not alive for the full exploration")]
    IncompleteTrack(usize),

    #[error("only {available} full-duration tracks, need {needed}")]
    TooFewTracks { available: usize, needed: usize },

    #[error("control point tracking lost")]
    TrackingLost,

    #[error("malformed log: {0}")]
    MalformedLog(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
