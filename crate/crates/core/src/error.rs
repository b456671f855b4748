use std::io;

use thiserror::Error;

/// What went wrong on a single LIBSVM line.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LineError {
    #[error("missing label")]
    MissingLabel,
    #[error("invalid label `{0}` (expected +1, -1, 1 or 0)")]
    InvalidLabel(String),
    #[error("feature token `{0}` has no `:` separator")]
    MissingColon(String),
    #[error("invalid feature index in `{0}`")]
    InvalidIndex(String),
    #[error("feature index must be 1-based, got 0")]
    ZeroIndex,
    #[error("invalid feature value in `{0}`")]
    InvalidValue(String),
    #[error("feature index {index} does not increase after {previous}")]
    NonIncreasingIndex { previous: usize, index: usize },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {kind}")]
    Parse { line: usize, kind: LineError },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("agent index {index} out of range for {n_agents} agents")]
    AgentOutOfRange { index: usize, n_agents: usize },

    #[error("invalid topology: {0}")]
    Topology(String),

    #[error("invalid sparse vector: {0}")]
    SparseVector(String),

    #[error("cannot split {examples} examples across {agents} agents")]
    NotEnoughExamples { examples: usize, agents: usize },

    #[error("stream of agent {agent} has {available} examples, {required} rounds requested")]
    StreamExhausted {
        agent: usize,
        available: usize,
        required: usize,
    },

    #[error("expert training: {0}")]
    Experts(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-positive weight {value} at component {index}")]
    NonPositiveWeight { index: usize, value: f64 },

    #[error("prox oracle did not converge after {iterations} iterations (gradient norm {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("replay check failed: {0}")]
    Replay(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
