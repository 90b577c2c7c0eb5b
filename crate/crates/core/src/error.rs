use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("state is not normalized (squared norm {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },

    #[error("cannot normalize a zero vector")]
    ZeroVector,

    #[error("non-finite amplitude")]
    NonFinite,

    #[error("not isometric: prescribed map changes an inner product by {max_deviation:e}")]
    NotIsometric { max_deviation: f64 },

    #[error("subsystem {0} is not present in this state")]
    MissingSubsystem(&'static str),

    #[error("unsupported environment dimension {0} (expected 1, 2 or 4)")]
    EnvironmentDimension(usize),

    #[error("invalid path index {0} (expected 1 or 2)")]
    InvalidPath(usize),

    #[error("overlap {0} outside [0, 1]")]
    OverlapOutOfRange(f64),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty branch: ancilla outcome has zero probability")]
    EmptyBranch,

    #[error("insufficient resolution: grid step {step:e} m exceeds {limit:e} m")]
    InsufficientResolution { step: f64, limit: f64 },

    #[error("curve does not cover the central fringe period")]
    WindowTooSmall,

    #[error("too few samples: {got} (need at least {need})")]
    TooFewSamples { got: u64, need: u64 },

    #[error("visibility estimate {0} outside [0, 1.05]")]
    EstimateOutOfRange(f64),
}
