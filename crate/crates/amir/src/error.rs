//! Error types shared across the engine.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed record at line {line_no}: {reason}")]
    MalformedRecord { line_no: usize, reason: String },
    #[error("duplicate id: {0}")]
    DuplicateId(String),
    #[error("empty input file")]
    EmptyFile,
    #[error("no topic assignment for document {0}")]
    MissingAssignment(String),
    #[error("empty vocabulary after normalization")]
    EmptyVocabulary,
    #[error("invalid topic count K={0}")]
    InvalidK(usize),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("input is not a probability distribution")]
    NotADistribution,
    #[error("degenerate distance matrix: all topics identical")]
    DegenerateMatrix,
    #[error("no matched keywords in any mapping")]
    NoMatchedKeywords,
    #[error("predicted and gold span lists cover different documents")]
    DocMismatch,
    #[error("inconsistent vector dimension at line {line_no}")]
    InconsistentDimension { line_no: usize },
    #[error("malformed line {line_no}")]
    MalformedLine { line_no: usize },
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("missing annotation for tweet {0}")]
    MissingAnnotation(String),
    #[error("topic {0} has no misleading tweets")]
    EmptyTopic(String),
    #[error("k={k} out of range for relevance vector of length {len}")]
    KOutOfRange { k: usize, len: usize },
    #[error("empty query set")]
    EmptyQuerySet,
    #[error("tweet {0} has no topic assignment")]
    NoTopicAssignment(String),
    #[error("stale upstream stage: {0}")]
    StaleUpstream(String),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
