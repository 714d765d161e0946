use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-positive depth: z = {0}")]
    NonPositiveDepth(f64),
    #[error("negative range: r = {0}")]
    NegativeRange(f64),
    #[error("albedo {0} outside [0, 1]")]
    InvalidAlbedo(f64),
    #[error("insufficient signal: slice sum {sum} <= {threshold}")]
    InsufficientSignal { sum: f64, threshold: f64 },
    #[error("ambiguous range: candidates at {first} m and {second} m")]
    AmbiguousRange { first: f64, second: f64 },
    #[error("degenerate 2D box: projected height {0} px")]
    DegenerateBox(f64),
    #[error("invalid class statistics: {0}")]
    InvalidStats(String),
    #[error("non-positive decoded dimension: {0}")]
    NonPositiveDimension(f64),
    #[error("all box corners behind the camera")]
    BehindCamera,
    #[error("projected box does not intersect the image")]
    FullyOutOfImage,
    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("parse error in {}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("model parse error: {0}")]
    ModelParse(String),
    #[error("PGM format error: {0}")]
    Pgm(String),
    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Short machine-readable tag, used by the CLI on stderr.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonPositiveDepth(_) => "NonPositiveDepth",
            Error::NegativeRange(_) => "NegativeRange",
            Error::InvalidAlbedo(_) => "InvalidAlbedo",
            Error::InsufficientSignal { .. } => "InsufficientSignal",
            Error::AmbiguousRange { .. } => "AmbiguousRange",
            Error::DegenerateBox(_) => "DegenerateBox",
            Error::InvalidStats(_) => "InvalidStats",
            Error::NonPositiveDimension(_) => "NonPositiveDimension",
            Error::BehindCamera => "BehindCamera",
            Error::FullyOutOfImage => "FullyOutOfImage",
            Error::ShapeMismatch { .. } => "ShapeMismatch",
            Error::EmptyDataset => "EmptyDataset",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Config { .. } => "ConfigError",
            Error::Parse { .. } => "ParseError",
            Error::ModelParse(_) => "ModelParseError",
            Error::Pgm(_) => "PgmError",
            Error::Io { .. } => "IoError",
        }
    }
}
