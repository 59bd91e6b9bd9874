use alloc::string::String;
use core::fmt;

/// Errors produced by the DSP core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A sample or matrix entry was NaN or infinite.
    NonFinite(&'static str),
    /// Two operands disagree in shape.
    ShapeMismatch {
        what: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },
    /// A parameter lies outside its admissible range.
    InvalidParameter(String),
    /// A rational resampling ratio that reduces to terms above the supported bound.
    UnsupportedRatio { up: u64, down: u64 },
    /// Input longer than the configured processing cap.
    TooLong { seconds: f64, cap: f64 },
    /// MELF payload could not be decoded.
    Melf(MelfError),
    /// A mel predictor failed.
    Predictor(String),
}

/// Decoding failures for the MELF exchange format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MelfError {
    BadMagic,
    UnsupportedVersion(u32),
    BadScaleFlag(u8),
    Truncated { expected: usize, found: usize },
    TrailingBytes(usize),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonFinite(what) => write!(f, "non-finite value in {what}"),
            Error::ShapeMismatch {
                what,
                expected,
                found,
            } => write!(
                f,
                "shape mismatch in {what}: expected {}x{}, found {}x{}",
                expected.0, expected.1, found.0, found.1
            ),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::UnsupportedRatio { up, down } => {
                write!(f, "resampling ratio {up}/{down} exceeds supported terms")
            }
            Error::TooLong { seconds, cap } => {
                write!(f, "input is {seconds:.1} s long, cap is {cap:.1} s")
            }
            Error::Melf(e) => write!(f, "malformed MELF data: {e}"),
            Error::Predictor(msg) => write!(f, "mel predictor failed: {msg}"),
        }
    }
}

impl fmt::Display for MelfError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MelfError::BadMagic => f.write_str("missing MELF magic"),
            MelfError::UnsupportedVersion(v) => write!(f, "unsupported version {v}"),
            MelfError::BadScaleFlag(s) => write!(f, "unknown scale flag {s}"),
            MelfError::Truncated { expected, found } => {
                write!(f, "truncated payload: expected {expected} bytes, found {found}")
            }
            MelfError::TrailingBytes(n) => write!(f, "{n} trailing bytes after payload"),
        }
    }
}

impl core::error::Error for Error {}
impl core::error::Error for MelfError {}

impl From<MelfError> for Error {
    fn from(e: MelfError) -> Self {
        Error::Melf(e)
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
