use std::path::PathBuf;

use thiserror::Error;

/// Span of a tree node as 0-based inclusive character indices.
pub type Span = (usize, usize);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeViolation {
    #[error("node {span:?} is not strictly binary")]
    NonBinary { span: Span },
    #[error("node {span:?} has inconsistent span indices: {detail}")]
    SpanMismatch { span: Span, detail: String },
    #[error("node {span:?} token {found:?} does not match expected {expected:?}")]
    TokenMismatch {
        span: Span,
        expected: String,
        found: String,
    },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O failure on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid UTF-8 in {path:?} at byte offset {offset}")]
    InvalidUtf8 { path: PathBuf, offset: usize },
    #[error("malformed line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: {violation}")]
    InvalidTree { line: usize, violation: TreeViolation },
    #[error("line {line}: morphs {morphs:?} do not spell {word:?}")]
    ConcatMismatch {
        line: usize,
        word: String,
        morphs: Vec<String>,
    },
    #[error("conflicting trees for word {0:?}")]
    DuplicateWord(String),
    #[error("target vocabulary size {target} is below the {characters} base characters")]
    TargetBelowCharacterFloor { target: usize, characters: usize },
    #[error("no tree available for word {0:?}")]
    MissingTree(String),
    #[error("length mismatch: {left} predictions vs {right} references")]
    LengthMismatch { left: usize, right: usize },
    #[error("alignment mismatch at item {index}: {left:?} vs {right:?}")]
    AlignmentMismatch {
        index: usize,
        left: String,
        right: String,
    },
    #[error("tree covers {tree:?} but gold segmentation is for {gold:?}")]
    CoverageMismatch { tree: String, gold: String },
    #[error("invalid Renyi order {0}: must be positive and different from 1")]
    InvalidAlpha(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error(transparent)]
    Tree(#[from] TreeViolation),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
