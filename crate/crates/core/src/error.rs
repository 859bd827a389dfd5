use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("feature rows ({rows}) do not match coordinate count ({coords})")]
    FeatureMismatch { rows: usize, coords: usize },

    #[error("{what}: expected length {expected}, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("coordinate ({x}, {y}, {z}) outside [0, {resolution})")]
    OutOfBounds {
        x: i32,
        y: i32,
        z: i32,
        resolution: u32,
    },

    #[error("channel count {actual} does not match expected {expected}")]
    ChannelMismatch { expected: usize, actual: usize },

    #[error("index {index} out of range for {count} elements")]
    IndexOutOfRange { index: i64, count: usize },

    #[error("pixel ({u}, {v}) outside {width}x{height} image")]
    PixelOutOfRange {
        u: i64,
        v: i64,
        width: usize,
        height: usize,
    },

    #[error("latitude {lat} or longitude {lon} out of range")]
    LatLonOutOfRange { lat: f64, lon: f64 },

    #[error("degenerate frame: {0}")]
    DegenerateFrame(String),

    #[error("{0} requires a bounded grid")]
    UnboundedGrid(&'static str),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("unknown semantic class id {0}")]
    UnknownSemanticId(u32),

    #[error("unknown semantic color ({0}, {1}, {2})")]
    UnknownSemanticColor(u8, u8, u8),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),

    #[error("non-canonical coordinate order at row {0}")]
    NonCanonical(usize),

    #[error("malformed data: {0}")]
    Format(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}
