use alloc::string::String;

/// Errors raised by the finite-volume operator algebra.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension {dim} exceeds the configured capacity {cap}")]
    Capacity { dim: usize, cap: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("matrix entries must be finite")]
    NonFinite,

    #[error("site {site} lies outside the volume {{1..{volume}}}")]
    OutsideVolume { site: usize, volume: usize },

    #[error("site dimensions differ ({left} vs {right})")]
    SiteDimMismatch { left: usize, right: usize },

    #[error("invalid support: {0}")]
    InvalidSupport(String),

    #[error("volume must contain at least one site")]
    EmptyVolume,

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("sup-norm grid over {support} sites exceeds the cap of {cap} active sites")]
    GridTooLarge { support: usize, cap: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
