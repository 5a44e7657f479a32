use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("{op}: input length {len} is shorter than window {window}; output would be empty")]
    EmptyOutput { op: &'static str, len: usize, window: usize },

    #[error("empty sequence passed to {op}")]
    EmptySequence { op: &'static str },

    #[error("numeric overflow: non-finite recurrent state at time step {step}")]
    NumericOverflow { step: usize },

    #[error("non-finite value in {stage}")]
    NonFinite { stage: String },

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("label row {row} is not one-hot")]
    NotOneHot { row: usize },

    #[error("zero-power input to {op}")]
    ZeroPower { op: &'static str },

    #[error("insufficient input length: need {needed} samples, got {got}")]
    InsufficientLength { needed: usize, got: usize },

    #[error("empty (mod, snr) cell: {mod_name} at {snr_db} dB")]
    EmptyCell { mod_name: &'static str, snr_db: i8 },

    #[error("empty test set")]
    EmptyTestSet,

    #[error("bad magic at byte offset {offset}: expected {expected:?}, found {found:?}")]
    BadMagic { offset: u64, expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {found} at byte offset {offset} (expected {expected})")]
    VersionMismatch { offset: u64, found: u16, expected: u16 },

    #[error("truncated file: {what} at byte offset {offset} needs {needed} more bytes")]
    Truncated { offset: u64, what: &'static str, needed: u64 },

    #[error("unexpected trailing data at byte offset {offset}")]
    TrailingData { offset: u64 },

    #[error("malformed file at byte offset {offset}: {detail}")]
    Malformed { offset: u64, detail: String },

    #[error("weight shape-table mismatch for {name}: file has {found:?}, model expects {expected:?}")]
    ShapeTableMismatch { name: String, found: Vec<usize>, expected: Vec<usize> },

    #[error("config error at `{key}`: {detail}")]
    Config { key: String, detail: String },

    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape { op, detail: detail.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for errors caused by numeric blow-up rather than bad data or usage.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NumericOverflow { .. } | Error::NonFinite { .. } | Error::NonFiniteLoss { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
