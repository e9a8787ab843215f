use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StructureError {
    #[error("token ids must be sequential: expected {expected}, found {found}")]
    BadId { expected: usize, found: usize },
    #[error("token {id} has head {head} outside the sentence")]
    HeadOutOfRange { id: usize, head: usize },
    #[error("token {0} is its own head")]
    SelfLoop(usize),
    #[error("head chain starting at token {0} forms a cycle")]
    Cycle(usize),
    #[error("expected exactly one root, found {0}")]
    RootCount(usize),
    #[error("dependency tree is not projective")]
    NonProjective,
    #[error("empty sentence")]
    Empty,
}

#[derive(Debug, Error)]
pub enum ConlluError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("sentence ending at line {line}: {source}")]
    Structure {
        line: usize,
        #[source]
        source: StructureError,
    },
}

#[derive(Debug, Error)]
pub enum KbError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoringError {
    #[error("scorer request to {endpoint} failed: {msg}")]
    Transport { endpoint: String, msg: String },
    #[error("scorer returned a malformed response from {endpoint}: {msg}")]
    Protocol { endpoint: String, msg: String },
    #[error("invalid scorer input: {0}")]
    Input(String),
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("row {row}: {msg}")]
    Row { row: usize, msg: String },
    #[error("missing column `{0}`")]
    MissingColumn(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Conllu(#[from] ConlluError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("{0}")]
    Lookup(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
