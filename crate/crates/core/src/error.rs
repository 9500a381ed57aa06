use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter lies outside the domain of the requested operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite value at index {index} in {what}")]
    NonFinite { what: &'static str, index: usize },

    #[error("size mismatch: {what} (expected {expected}, got {got})")]
    SizeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid class label {label} (labels are 1-based, C = {num_classes})")]
    InvalidLabel { label: usize, num_classes: usize },

    #[error("class {class} has {rows} training rows, need at least {required}")]
    InsufficientClassRows {
        class: usize,
        rows: usize,
        required: usize,
    },

    #[error("regularized covariance of {which} is not positive definite; increase epsilon")]
    SingularCovariance { which: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
