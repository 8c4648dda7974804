use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    // geometry
    #[error("point has non-positive depth {0}")]
    NonPositiveDepth(f64),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("matrix is not a proper rotation (orthonormality error {orthonormality:.3e}, det {det:.6})")]
    NotARotation { orthonormality: f64, det: f64 },
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    // pointing
    #[error("invalid depth scene: {0}")]
    InvalidScene(String),
    #[error("every keypoint projects outside the image")]
    AllOutOfFrame,
    #[error("degenerate pointing gesture: {0}")]
    DegenerateGesture(String),
    #[error("pointing ray does not intersect the depth map")]
    NoIntersection,
    #[error("crop size {size} exceeds image {width}x{height}")]
    SizeExceedsImage { size: u32, width: u32, height: u32 },

    // gesture
    #[error("degenerate hand: {0}")]
    DegenerateHand(String),
    #[error("cannot take cosine of a zero vector")]
    ZeroVector,

    // memory
    #[error("duplicate memory entry id {0:?}")]
    DuplicateId(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid memory entry {id:?}: {reason}")]
    InvalidEntry { id: String, reason: String },
    #[error("corrupt manifest at line {line}: {reason}")]
    CorruptManifest { line: usize, reason: String },
    #[error("missing tensor file {0}")]
    MissingTensorFile(PathBuf),
    #[error("bad magic bytes in tensor file (expected GGT1, found {0:?})")]
    MagicMismatch([u8; 4]),
    #[error("malformed tensor: {0}")]
    MalformedTensor(String),

    // retrieval
    #[error("memory bank is empty")]
    EmptyBank,
    #[error("no memory entry matches the query chirality")]
    NoChiralityMatch,
    #[error("no retrieval candidates")]
    NoCandidates,

    // transfer
    #[error("feature map is invalid: {0}")]
    InvalidFeatureMap(String),
    #[error("pixel ({u}, {v}) is outside the {width}x{height} image")]
    OutOfBounds { u: f64, v: f64, width: u32, height: u32 },
    #[error("feature channel mismatch: source {src} vs target {tgt}")]
    ChannelMismatch { src: usize, tgt: usize },
    #[error("sampled source feature has zero norm")]
    ZeroQueryFeature,
    #[error("no target cell with non-zero feature inside the search window")]
    EmptySearchWindow,

    // gripper
    #[error("gripper landmarks are collinear")]
    DegenerateTriangle,

    // grasp
    #[error("no grasp candidates")]
    EmptyCandidates,
    #[error("no valid depth near ({u:.1}, {v:.1})")]
    NoValidDepth { u: f64, v: f64 },
    #[error("quaternion norm {0} is not within 1e-3 of unit")]
    NonUnitQuaternion(f64),
    #[error("grasp score {0} outside [0, 1]")]
    ScoreOutOfRange(f64),
    #[error("invalid selection parameters: {0}")]
    InvalidParams(String),

    // synth
    #[error("could not satisfy planted-feature margin after {0} retries")]
    MarginUnsatisfiable(usize),

    // metrics / io
    #[error("mask has no true pixels")]
    EmptyMask,
    #[error("parse error in {context}: {reason}")]
    Parse { context: String, reason: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse(context: impl Into<String>, reason: impl ToString) -> Self {
        Error::Parse {
            context: context.into(),
            reason: reason.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
