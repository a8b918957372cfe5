use thiserror::Error;

/// Errors surfaced by the estimation pipeline.
#[derive(Debug, Error)]
pub enum MmdError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("lag order {p} must be smaller than the series length {len}")]
    LagTooLarge { p: usize, len: usize },

    #[error("degenerate bandwidth: all embedded rows are identical")]
    DegenerateBandwidth,

    #[error("stale Gram cache: cached sample id {cached} does not match observed sample id {got}")]
    StaleCache { cached: u64, got: u64 },

    #[error("Ricker intensity diverged: phi*N_t = {intensity} at step {step}")]
    DivergedIntensity { intensity: f64, step: usize },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("non-finite loss at iteration {iter}")]
    NonFiniteLoss { iter: usize },

    #[error("objective evaluation failed at probe of coordinate {coord}: {source}")]
    GradientProbe {
        coord: usize,
        #[source]
        source: Box<MmdError>,
    },

    #[error("all lag candidates failed during selection")]
    AllLagsFailed,

    #[error("singular summary covariance after regularization")]
    SingularCovariance,

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, MmdError>;
