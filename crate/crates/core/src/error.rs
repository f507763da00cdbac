use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::Point;

/// Errors produced by the skeleton toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mask has no foreground pixels")]
    EmptyMask,
    #[error("mask has {0} foreground components, expected exactly one")]
    MultipleComponents(usize),
    #[error("invalid mask dimensions {width}x{height} for {len} pixels")]
    InvalidDimensions { width: usize, height: usize, len: usize },
    #[error("contour has {len} points, fewer than the requested {k_min}")]
    ContourTooShort { len: usize, k_min: usize },
    #[error("invalid DCE range k_min={k_min}, k_max={k_max}")]
    InvalidRange { k_min: usize, k_max: usize },
    #[error("branch {0:016x} is not a leaf branch")]
    NotALeafBranch(u64),
    #[error("unknown branch id {0:016x}")]
    UnknownBranchId(u64),
    #[error("boxes cover {0} endpoints, at least 2 are required")]
    TooFewPreservedEndpoints(usize),
    #[error("no skeleton path between {0} and {1}")]
    Disconnected(Point, Point),
    #[error("{0} is not a skeleton point")]
    NotSkeletonPoint(Point),
    #[error("skeleton point {0} has no radius")]
    MissingRadii(Point),
    #[error("shape has zero area")]
    EmptyShape,
    #[error("skeleton is empty")]
    EmptySkeleton,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("no submissions to integrate")]
    NoSubmissions,
    #[error("submissions are not prunings of a common skeleton: {0}")]
    IncompatibleLadders(String),
    #[error("dataset root {0} does not exist")]
    MissingRoot(PathBuf),
    #[error("failed to decode {path}: {message}")]
    Decode { path: PathBuf, message: String },
    #[error("record invariant violated: {0}")]
    InvariantViolation(String),
    #[error("unsupported format version {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("ladder file {0} not found")]
    MissingLadder(PathBuf),
    #[error("session replay diverged: {0}")]
    ReplayMismatch(String),
    #[error("ladder step {0} is out of bounds")]
    StepOutOfBounds(i64),
    #[error("nothing to {0}")]
    NothingTo(&'static str),
    #[error("history entry {0} does not exist")]
    UnknownHistoryEntry(usize),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
