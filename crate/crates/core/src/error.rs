//! Error type shared by the core modules.

use alloc::string::String;

/// Errors reported by validation, inference, and training.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A feature vector or parameter vector has the wrong length.
    #[error("dimension mismatch in {what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    /// Two aligned collections differ in length.
    #[error("length mismatch in {what}: expected {expected}, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    /// A label id is outside its label space.
    #[error("{what} id {value} out of range (must be < {limit})")]
    LabelOutOfRange {
        what: &'static str,
        value: usize,
        limit: usize,
    },
    /// A NaN or infinity where a finite value is required.
    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },
    /// An input that must be nonempty is empty.
    #[error("empty input: {what}")]
    EmptyInput { what: &'static str },
    /// A hyperparameter or specification field violates its invariant.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    /// Exhaustive enumeration would exceed the guard cap.
    #[error(
        "instance too large for exhaustive decoding: {assignments} assignments exceeds cap {cap}"
    )]
    InstanceTooLarge { assignments: u128, cap: u128 },
    /// Clustering input cannot support the requested number of clusters.
    #[error("degenerate clustering input: {0}")]
    DegenerateInput(String),
    /// A training sequence is missing gold labels.
    #[error("missing gold labels on sequence `{id}`")]
    MissingLabels { id: String },
    /// A non-finite value appeared inside an optimizer.
    #[error("numerical instability in {0}: non-finite value encountered")]
    NumericalInstability(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
