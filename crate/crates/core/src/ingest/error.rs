use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while reading or validating the input tables.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("{file}: missing or mismatched header, expected `{expected}`")]
    MissingHeader { file: String, expected: String },

    #[error("{file} line {line}, column `{column}`: {reason}")]
    MalformedRow {
        file: String,
        line: u64,
        column: String,
        reason: String,
    },

    #[error("{file} line {line}: duplicate person_id `{person_id}`")]
    DuplicatePersonId {
        file: String,
        line: u64,
        person_id: String,
    },

    #[error("{file} line {line}, column `{column}`: flag value `{value}` is not 0 or 1")]
    FlagOutOfRange {
        file: String,
        line: u64,
        column: String,
        value: String,
    },

    #[error("{file} line {line}: duration_min must be positive, got {value}")]
    NonPositiveDuration { file: String, line: u64, value: i64 },

    #[error("{file} line {line}: unknown emission category `{category}`")]
    UnknownCategory {
        file: String,
        line: u64,
        category: String,
    },

    #[error("{file} line {line}: unknown environmental factor `{factor}`")]
    UnknownFactor {
        file: String,
        line: u64,
        factor: String,
    },

    #[error("{file} line {line}, column `{column}`: coordinate {value} out of range")]
    CoordinateOutOfRange {
        file: String,
        line: u64,
        column: String,
        value: f64,
    },

    #[error("{file} line {line}: duplicate record for key {key}")]
    DuplicateRecord { file: String, line: u64, key: String },
}

impl IngestError {
    /// True for I/O failures (as opposed to content validation failures).
    pub fn is_io(&self) -> bool {
        matches!(self, IngestError::Io { .. })
    }
}

/// Errors from cohort construction.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum CohortError {
    #[error("no eligible asthma-positive profiles")]
    NoPositives,
    #[error("{negatives} eligible negatives cannot balance {positives} positives")]
    InsufficientNegatives { positives: usize, negatives: usize },
}
