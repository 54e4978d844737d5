//! Error type shared by every module of the engine.

use thiserror::Error;

use crate::value::AgentId;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, SimError>;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("schema must declare at least one column")]
    EmptySchema,
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("agent {0} is unknown or not alive")]
    NotAlive(AgentId),
    #[error("type mismatch for `{attr}`: expected {expected}, got {got}")]
    TypeMismatch {
        attr: String,
        expected: String,
        got: String,
    },
    #[error("label `{label}` is not in the label set of `{attr}`")]
    UnknownLabel { attr: String, label: String },
    #[error("a batch update is already open")]
    BatchAlreadyOpen,
    #[error("no batch update is open")]
    NoBatchOpen,
    #[error("{0} is not allowed while a batch update is open")]
    BatchPending(&'static str),
    #[error("aggregate over `{attr}` requires a numeric column")]
    NonNumericAggregate { attr: String },
    #[error("{0} is undefined over an empty live set")]
    EmptyAggregate(&'static str),
    #[error("integer overflow in {0}")]
    NumericOverflow(&'static str),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("out of bounds: {0}")]
    OutOfBounds(String),
    #[error("{0} must be finite")]
    NonFinite(&'static str),
    #[error("k-nearest-neighbor query on an empty index")]
    EmptyIndex,
    #[error("graph is disconnected")]
    Disconnected,
    #[error("duplicate parameter name `{0}`")]
    DuplicateParam(String),
    #[error("continuous parameter `{0}` is not allowed here")]
    ContinuousParam(String),
    #[error("run (combo {combo_index}, replication {replication}) failed: {source}")]
    RunFailed {
        combo_index: usize,
        replication: usize,
        #[source]
        source: Box<SimError>,
    },
    #[error("metrics rows disagree: {0}")]
    MetricMismatch(String),
    #[error("kernel matrix is not positive definite after jitter escalation")]
    SingularKernel,
    #[error("objective returned a non-finite value ({0})")]
    NonFiniteObjective(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
