use std::path::PathBuf;

/// Errors raised across the calibration toolkit.
///
/// Every variant maps to a stable machine-readable [`Error::kind`] string that
/// the command-line tool prints on failure.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("ray is parallel to the plane (|n·l| = {incidence:e})")]
    GrazingRay { incidence: f64 },

    #[error("plane lies behind the camera along this ray (z* = {depth})")]
    NegativeDepth { depth: f64 },

    #[error("depth must be positive, got {0}")]
    NonPositiveDepth(f64),

    #[error("invalid plane: {0}")]
    InvalidPlane(String),

    #[error("invalid rigid transform: {0}")]
    InvalidTransform(String),

    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),

    #[error("invalid depth frame: {0}")]
    InvalidFrame(String),

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (u32, u32),
        actual: (u32, u32),
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate least-squares system: {0}")]
    DegenerateSystem(String),

    #[error("plane distances span {span:.4} m, need at least {required:.4} m")]
    TooFewDistances { span: f64, required: f64 },

    #[error("degenerate point cloud: {0}")]
    DegenerateCloud(String),

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("wall {wall_index} is not visible from the camera")]
    WallBehindCamera { wall_index: usize },

    #[error("bias field exceeds {limit} m (|mu| = {value:.4} m)")]
    BiasTooLarge { value: f64, limit: f64 },

    #[error("unsupported format in {path}: {reason}")]
    UnsupportedFormat { path: PathBuf, reason: String },

    #[error("corrupt file {path}: {reason}")]
    CorruptFile { path: PathBuf, reason: String },

    #[error("no line found in scan: {0}")]
    NoLine(String),

    #[error("manifest {path}: {reason}")]
    Manifest { path: PathBuf, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable identifier of the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::GrazingRay { .. } => "GrazingRay",
            Error::NegativeDepth { .. } => "NegativeDepth",
            Error::NonPositiveDepth(_) => "NonPositiveDepth",
            Error::InvalidPlane(_) => "InvalidPlane",
            Error::InvalidTransform(_) => "InvalidTransform",
            Error::InvalidIntrinsics(_) => "InvalidIntrinsics",
            Error::InvalidFrame(_) => "InvalidFrame",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::DegenerateSystem(_) => "DegenerateSystem",
            Error::TooFewDistances { .. } => "TooFewDistances",
            Error::DegenerateCloud(_) => "DegenerateCloud",
            Error::EmptyCloud => "EmptyCloud",
            Error::WallBehindCamera { .. } => "WallBehindCamera",
            Error::BiasTooLarge { .. } => "BiasTooLarge",
            Error::UnsupportedFormat { .. } => "UnsupportedFormat",
            Error::CorruptFile { .. } => "CorruptFile",
            Error::NoLine(_) => "NoLine",
            Error::Manifest { .. } => "Manifest",
            Error::Io { .. } => "Io",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
