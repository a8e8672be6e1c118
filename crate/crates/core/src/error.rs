use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the phase retrieval toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid window length {0}: must be even and at least 2")]
    InvalidWindow(usize),

    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("shape mismatch: expected {expected}, got {actual} ({context})")]
    ShapeMismatch {
        expected: usize,
        actual: usize,
        context: &'static str,
    },

    #[error("augmentation parameter rho must be positive, got {0}")]
    InvalidRho(f64),

    #[error("value {value} outside the domain of the generator (beta = {beta})")]
    Domain { beta: f64, value: f64 },

    #[error("minimum not bracketed inside [{lo}, {hi}]")]
    NotBracketed { lo: f64, hi: f64 },

    #[error("beta = {0} is too close to the singular value 1")]
    BetaSingular(f64),

    #[error("APL unit is not invertible at y = {0}")]
    NotInvertible(f64),

    #[error("gamma1 must be positive for metric recovery, got {0}")]
    NonPositiveGamma(f64),

    #[error("tape does not match the model: {0}")]
    TapeMismatch(String),

    #[error("zero reference signal")]
    ZeroReference,

    #[error("non-finite loss {loss} at epoch {epoch}, batch {batch}")]
    Divergence {
        epoch: usize,
        batch: usize,
        loss: f64,
    },

    #[error("empty dataset: {0}")]
    EmptyDataset(&'static str),

    #[error("wav parse error at byte offset {offset}: {message}")]
    WavParse { offset: u64, message: String },

    #[error("unsupported wav encoding: {0}")]
    WavUnsupported(String),

    #[error("stoi: {0}")]
    Stoi(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config: {0}")]
    Config(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("{path}: {source}")]
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
}

pub type Result<T> = std::result::Result<T, Error>;
