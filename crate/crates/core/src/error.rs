use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("fractional order {0} outside the open interval (0, 2)")]
    InvalidOrder(f64),

    #[error("invalid filter bank spec: {0}")]
    InvalidSpec(String),

    #[error("grid {width}x{height} too small for {scales} scales: need 2^(S-1) <= min(width, height)/4")]
    GridTooSmall {
        width: usize,
        height: usize,
        scales: usize,
    },

    #[error("path step (scale {scale}, angle {angle}) outside bank of {scales} scales x {angles} angles")]
    PathOutOfBank {
        scale: usize,
        angle: usize,
        scales: usize,
        angles: usize,
    },

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("invalid patch extraction request: {0}")]
    InvalidPatch(String),

    #[error("feature tensor error: {0}")]
    Tensor(String),

    #[error("class {class}: {reason}")]
    Class { class: i32, reason: String },

    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("empty pixel set")]
    EmptySet,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
