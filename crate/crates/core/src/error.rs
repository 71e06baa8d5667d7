use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("empty patch domain")]
    EmptyPatch,

    #[error("patch domain has duplicate coordinate ({0}, {1})")]
    DuplicatePatchCoordinate(i64, i64),

    #[error("pixel value {value} at ({x}, {y}) is not an integer in [0, {levels}]")]
    NotQuantized { x: usize, y: usize, value: f64, levels: u32 },

    #[error("patch of {size} pixels exceeds the covariance cap of {cap}")]
    PatchTooLarge { size: usize, cap: usize },

    #[error("offset ({0}, {1}) has a zero component; closed form needs both components nonzero")]
    ZeroOffsetComponent(i64, i64),

    #[error("negative cumulant {index}: {value}")]
    NegativeCumulant { index: usize, value: f64 },

    #[error("probability {0} outside the open interval (0, 1)")]
    InvalidProbability(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("image {width}x{height} is smaller than the {patch}x{patch} patch")]
    ImageSmallerThanPatch { width: usize, height: usize, patch: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("graph too small for lattice fitting: {0} vertices")]
    GraphTooSmall(usize),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad inputs rather than numerical breakdown.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Singular(_) | Error::Numerical(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
