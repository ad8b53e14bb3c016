//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the segmentation primitives and pipeline stages.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violated a documented precondition (window parity, ranges, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Input data violated a structural precondition (dimensions, ordering, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A histogram admits no threshold (fewer than two occupied bins).
    #[error("no valid threshold: histogram has fewer than two occupied bins")]
    NoValidThreshold,

    /// A level-set update produced a non-finite value.
    #[error("numerical instability: non-finite level-set field after step {step}")]
    NumericalInstability { step: usize },

    /// The synthetic generator could not satisfy its placement constraints.
    #[error("generation failure: {0}")]
    GenerationFailure(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("image codec error: {0}")]
    Image(#[from] image::ImageError),
}

pub type Result<T> = std::result::Result<T, Error>;
