use thiserror::Error;

use crate::model::Pair;

/// Errors raised by the clocksync library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix must have at least one row and one column (got {rows}x{cols})")]
    EmptyMatrix { rows: usize, cols: usize },

    #[error("a network needs at least 3 nodes, got {0}")]
    TooFewNodes(usize),

    #[error("{n} nodes exceeds the default limit of {max}; pass the force flag to proceed")]
    TooManyNodes { n: usize, max: usize },

    #[error("invalid session pair ({i},{j}) for a {n}-node network")]
    InvalidPair { i: usize, j: usize, n: usize },

    #[error("duplicate session pair {0}")]
    DuplicatePair(Pair),

    #[error("missing measurement for session {0}")]
    MissingMeasurement(Pair),

    #[error("fault magnitude on {0} must be nonzero")]
    ZeroMagnitude(Pair),

    #[error("fault magnitude {magnitude} on {pair} is not a nonzero integer multiple of the period {period}")]
    NotMultipleOfPeriod {
        pair: Pair,
        magnitude: String,
        period: String,
    },

    #[error("period must be positive")]
    NonPositivePeriod,

    #[error("not a permutation of 0..{0}")]
    InvalidPermutation(usize),

    #[error("node count mismatch: {left} vs {right}")]
    NodeCountMismatch { left: usize, right: usize },

    #[error("no fault placement yields a unique solution with nonzero fault estimates")]
    Unrecoverable,

    #[error("estimated fault count {k} exceeds actual fault count {actual}")]
    EstimatedExceedsActual { k: usize, actual: usize },

    #[error("fault count {count} outside the admissible range {min}..={max}")]
    FaultCountOutOfRange {
        count: usize,
        min: usize,
        max: usize,
    },

    #[error("invalid session trace: {0}")]
    InvalidTrace(String),

    #[error("round-trip time is negative")]
    NegativeRtt,

    #[error("no non-negative period count reconciles the round-trip time with the phases")]
    InconsistentTrace,

    #[error("offset error lies exactly half a period from two integers")]
    ClassificationTie,

    #[error("cannot parse rational from {0:?}")]
    ParseRational(String),
}

pub type Result<T> = std::result::Result<T, Error>;
