use std::path::PathBuf;

use thiserror::Error;

use crate::waveform::Modulation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value for {0}")]
    NonFinite(&'static str),

    #[error("not enough symbols: need {needed}, got {got}")]
    InsufficientSymbols { needed: usize, got: usize },

    #[error("tone index {index} out of range 1..={order}")]
    ToneIndexOutOfRange { index: usize, order: usize },

    #[error("sequence too short: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("integer delay {k0} does not fit in a signal of {len} samples")]
    DelayTooLong { k0: usize, len: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("feature column {0} is constant over the training rows")]
    ConstantFeature(&'static str),

    #[error("training data contains a single label")]
    SingleLabel,

    #[error("closed-form variance came out negative ({0:e})")]
    NegativeVariance(f64),

    #[error("{modulation} realization {index}: {source}")]
    Realization {
        modulation: Modulation,
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed input: {0}")]
    Format(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for errors caused by bad input data rather than bad usage.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::InvalidArgument(_) | Error::Config(_))
    }
}
