use thiserror::Error;

/// Errors raised by tensor construction and tape operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AutodiffError {
    #[error("{op}: shape contract violated ({detail})")]
    Shape { op: &'static str, detail: String },

    #[error("{op}: numeric domain violation ({detail})")]
    NumericDomain { op: &'static str, detail: String },

    #[error("{op}: index {index} out of range for extent {extent}")]
    IndexOutOfRange {
        op: &'static str,
        index: usize,
        extent: usize,
    },

    #[error("backward: loss must be a single-element tensor, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },

    #[error("backward: tape is empty")]
    EmptyTape,

    #[error("tape was consumed by a backward pass; reset it before reuse")]
    TapeConsumed,

    #[error("variable {index} does not belong to this tape (length {len})")]
    UnknownVar { index: usize, len: usize },
}

pub type Result<T> = std::result::Result<T, AutodiffError>;

pub(crate) fn shape_err(op: &'static str, detail: impl Into<String>) -> AutodiffError {
    AutodiffError::Shape {
        op,
        detail: detail.into(),
    }
}
