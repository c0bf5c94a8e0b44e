//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("row {row} has {got} columns, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        got: usize,
    },

    #[error("label {value:?} in row {row} does not parse to 0 or 1")]
    LabelFormat { row: usize, value: String },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("column {0:?} not found in header")]
    MissingColumn(String),

    #[error("value {value:?} not in vocabulary of feature {feature:?}")]
    UnknownCategory { feature: String, value: String },

    #[error("unknown feature {0:?}")]
    UnknownFeature(String),

    #[error("split ratios must be positive and sum to 1, got sum {0}")]
    BadSplitRatios(f64),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("fit failed in chunk {chunk}: {source}")]
    ChunkFit {
        chunk: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(
        "sampling saturated: needed {needed} valid rows, accepted {accepted} after \
         {attempts} batches (acceptance rate {rate:.4})"
    )]
    Saturated {
        needed: usize,
        accepted: usize,
        attempts: usize,
        rate: f64,
    },

    #[error("metric undefined: {0}")]
    Metric(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("{0}")]
    Runner(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
