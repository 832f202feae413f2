use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {reason}")]
    Image { path: PathBuf, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid dimensions: {0}")]
    Dimensions(String),

    #[error("coordinate ({x}, {y}) outside image of size {width}x{height}")]
    OutOfBounds {
        x: f64,
        y: f64,
        width: usize,
        height: usize,
    },

    #[error("invalid iris annotation: {0}")]
    Annotation(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no usable training images (need at least {patch_size}x{patch_size} pixels)")]
    NoUsableImages { patch_size: usize },

    #[error("rank deficient data: requested {requested} components but only {rank} are achievable")]
    RankDeficient { requested: usize, rank: usize },

    #[error("ICA produced a non-finite value at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("unsupported file version {found:?} (expected {expected:?})")]
    Version { found: String, expected: String },

    #[error("corrupt file: {0}")]
    Corrupt(String),

    #[error("degenerate training data: {0}")]
    DegenerateData(String),

    #[error("feature dimension mismatch: model expects {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("model has no weak learners")]
    EmptyModel,

    #[error("histogram has empty support: every pixel is masked")]
    EmptySupport,

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("split: {0}")]
    Split(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    /// An error shared between several consumers, kept as its message.
    #[error("{0}")]
    Shared(String),

    #[error("config {config}: {source}")]
    Config {
        config: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn image(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Image {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
