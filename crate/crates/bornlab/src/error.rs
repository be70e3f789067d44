use thiserror::Error;

/// Errors produced by the laboratory. Variants mirror the failure modes of
/// the individual operations; `NotApplicable` is reserved for checks that a
/// given assignment cannot meaningfully undergo (reported, never a failure).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("invalid operator: {0}")]
    InvalidOperator(String),
    #[error("operator is not in the subset-sum algebra of the context")]
    NotInContextAlgebra,
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid tags: {0}")]
    InvalidTags(String),
    #[error("assignment requires probability tags but none were given")]
    MissingTags,
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("underdetermined fit: design matrix rank {rank} below {needed}")]
    UnderdeterminedFit { rank: usize, needed: usize },
    #[error("invalid dims: {0}")]
    InvalidDims(String),
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("invalid scaling: {0}")]
    InvalidScaling(String),
    #[error("unknown identifier: {0}")]
    UnknownIdentifier(String),
    #[error("indeterminate form: {0}")]
    Indeterminate(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
