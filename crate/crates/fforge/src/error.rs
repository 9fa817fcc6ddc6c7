//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An image contained NaN or infinite intensities.
    #[error("non-finite intensity at element {index}: {value}")]
    NonFiniteInput { index: usize, value: f32 },

    /// Two images (or an image and a model) disagree on dimensions.
    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    /// Dataset root yielded no usable entries.
    #[error("dataset at {0} contains no usable entries")]
    EmptyDataset(PathBuf),

    /// Index CSV violates the schema or its invariants.
    #[error("malformed index: {0}")]
    MalformedIndex(String),

    /// A landmark coordinate falls outside the frame.
    #[error("landmark ({x}, {y}) outside {width}x{height} frame")]
    LandmarkOutOfBounds { x: f64, y: f64, width: usize, height: usize },

    /// Requested video id is not in the index.
    #[error("unknown video id: {0}")]
    UnknownVideo(String),

    /// Filesystem failure while producing an artifact.
    #[error("i/o failure at {path}: {source}")]
    IoFailure { path: PathBuf, source: std::io::Error },

    /// Perturbation parameters outside their documented ranges.
    #[error("invalid perturbation parameters: {0}")]
    InvalidParams(String),

    /// JPEG quality outside 1..=100.
    #[error("invalid jpeg quality {0}, expected 1..=100")]
    InvalidQuality(u8),

    /// Training loss became NaN.
    #[error("training diverged (NaN loss) at epoch {epoch}")]
    DivergedTraining { epoch: usize },

    /// The architecture grammar ran out before enough models were accepted.
    #[error("architecture grammar exhausted: {accepted} of {requested} models accepted")]
    PoolExhausted { accepted: usize, requested: usize },

    /// Chain referenced a member index outside the pool.
    #[error("unknown pool member index {index} (pool size {pool_size})")]
    UnknownMember { index: usize, pool_size: usize },

    /// An EA training regime was requested without an autoencoder pool.
    #[error("regime {0} requires an autoencoder pool")]
    MissingPool(String),

    /// The score model cannot produce input gradients.
    #[error("model does not expose loss gradients with respect to the input")]
    NoGradientCapability,

    /// AUC is undefined when only one class is present.
    #[error("scores contain a single class; AUC is undefined")]
    SingleClassInput,

    /// Video-level aggregation over an empty frame list.
    #[error("video {0} has no scored frames")]
    EmptyVideo(String),

    /// Run configuration failed validation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Checkpoint or manifest payload is corrupt.
    #[error("corrupt artifact {path}: {reason}")]
    CorruptArtifact { path: PathBuf, reason: String },

    #[error("image codec error: {0}")]
    Codec(#[from] image::ImageError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io_at(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::IoFailure { path, source }
    }
}
