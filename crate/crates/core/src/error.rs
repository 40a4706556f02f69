use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the feature-extraction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read audio file {path}: {message}")]
    Unreadable { path: PathBuf, message: String },

    #[error("unsupported audio encoding in {path}: {message}")]
    UnsupportedEncoding { path: PathBuf, message: String },

    #[error("audio file {path} contains no samples")]
    EmptyAudio { path: PathBuf },

    #[error("sample rate {0} Hz is below the supported minimum of 8000 Hz")]
    SampleRateTooLow(u32),

    #[error("signal contains a non-finite sample at index {0}")]
    NonFinite(usize),

    #[error("input too short: {what} needs at least {needed_s:.3} s, got {actual_s:.3} s")]
    TooShort {
        what: &'static str,
        needed_s: f64,
        actual_s: f64,
    },

    #[error("invalid parameter {name}: {message}")]
    InvalidParameter { name: &'static str, message: String },

    #[error("no voiced frames: FM envelope cannot be computed")]
    FullyUnvoiced,

    #[error("spectrum is all zero")]
    ZeroSpectrum,

    #[error("invalid synthesis spec: {0}")]
    InvalidSynthSpec(String),

    #[error("dataset: {0}")]
    Dataset(String),

    #[error("dataset parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, message: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        message: message.into(),
    }
}
