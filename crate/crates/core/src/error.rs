use thiserror::Error;

/// Coarse failure class, used by the CLI to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad input data or a violated precondition on data.
    Data,
    /// A numerical failure: overflow, divergence, log of a non-positive value.
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty-reduction: reduction over an empty sequence")]
    EmptyReduction,
    #[error("bad-label: label {label} out of range for {classes} classes")]
    BadLabel { label: usize, classes: usize },
    #[error("non-finite-objective: objective evaluated to {value} at coordinate {coord}")]
    NonFiniteObjective { coord: usize, value: f64 },
    #[error("non-finite: {what} contains a non-finite entry")]
    NonFinite { what: &'static str },
    #[error("shape-mismatch: {0}")]
    ShapeMismatch(String),
    #[error("dim-mismatch: expected dimension {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("range-violation: histogram intersection input {value} outside [0, 1]")]
    RangeViolation { value: f64 },
    /// `dim` is `None` when the outer activation overflowed.
    #[error("activation-overflow: non-finite intermediate at {}", match dim { Some(d) => format!("dimension {d}"), None => "outer activation".to_string() })]
    ActivationOverflow { dim: Option<usize> },
    #[error("invalid-kernel: {0}")]
    InvalidKernel(String),
    #[error("gram: entry ({row}, {col}): {source}")]
    Gram {
        row: usize,
        col: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("isolated-node: row {row} sums to zero")]
    IsolatedNode { row: usize },
    #[error("bad-hop: hop count must be >= 1, got {0}")]
    BadHop(usize),
    #[error("bad-node: node {node} out of range for {nodes} nodes")]
    BadNode { node: usize, nodes: usize },
    #[error("bad-permutation: not a bijection on [0, {0})")]
    BadPermutation(usize),
    #[error("invalid-graph: {0}")]
    InvalidGraph(String),
    #[error("bad-record: line {line}: expected {expected} fields, found {found}")]
    BadRecord {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("parse-error: line {line}: field {field}: {text:?} is not a number")]
    ParseError {
        line: usize,
        field: usize,
        text: String,
    },
    #[error("empty-sequence: {0} contains no frames")]
    EmptySequence(String),
    #[error("bad-layout: {0}")]
    BadLayout(String),
    #[error("unsupported-topology: {0}")]
    UnsupportedTopology(String),
    #[error("not-symmetric: asymmetry {0:e} exceeds tolerance")]
    NotSymmetric(f64),
    #[error("overdim: requested {requested} dimensions but at most {available} are available")]
    Overdim { requested: usize, available: usize },
    #[error("log-domain-violation: inner sum {value} <= 0 at node {node}, filter {filter}")]
    LogDomainViolation { node: usize, filter: usize, value: f64 },
    #[error("diverged: non-finite loss at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("invalid-config: {0}")]
    InvalidConfig(String),
    #[error("unsupported-version: checkpoint version {found}, expected {expected}")]
    UnsupportedVersion { found: u32, expected: u32 },
    #[error("corrupt-checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error("io: {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Module-qualified error code, e.g. `kernels/dim-mismatch`.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyReduction => "numcore/empty-reduction",
            Error::BadLabel { .. } => "numcore/bad-label",
            Error::NonFiniteObjective { .. } => "numcore/non-finite-objective",
            Error::NonFinite { .. } => "numcore/non-finite",
            Error::ShapeMismatch(_) => "train/shape-mismatch",
            Error::DimMismatch { .. } => "kernels/dim-mismatch",
            Error::RangeViolation { .. } => "kernels/range-violation",
            Error::ActivationOverflow { .. } => "kernels/activation-overflow",
            Error::InvalidKernel(_) => "kernels/invalid-kernel",
            Error::Gram { source, .. } => source.code(),
            Error::IsolatedNode { .. } => "graph/isolated-node",
            Error::BadHop(_) => "graph/bad-hop",
            Error::BadNode { .. } => "graph/bad-node",
            Error::BadPermutation(_) => "graph/bad-permutation",
            Error::InvalidGraph(_) => "graph/invalid-graph",
            Error::BadRecord { .. } => "skeleton/bad-record",
            Error::ParseError { .. } => "skeleton/parse-error",
            Error::EmptySequence(_) => "skeleton/empty-sequence",
            Error::BadLayout(_) => "skeleton/bad-layout",
            Error::UnsupportedTopology(_) => "skeleton/unsupported-topology",
            Error::NotSymmetric(_) => "kpca/not-symmetric",
            Error::Overdim { .. } => "kpca/overdim",
            Error::LogDomainViolation { .. } => "model/log-domain-violation",
            Error::Diverged { .. } => "train/diverged",
            Error::InvalidConfig(_) => "train/invalid-config",
            Error::UnsupportedVersion { .. } => "train/unsupported-version",
            Error::CorruptCheckpoint(_) => "train/corrupt-checkpoint",
            Error::Io { .. } => "io/error",
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::NonFiniteObjective { .. }
            | Error::NonFinite { .. }
            | Error::ActivationOverflow { .. }
            | Error::NotSymmetric(_)
            | Error::LogDomainViolation { .. }
            | Error::Diverged { .. } => ErrorClass::Numerical,
            Error::Gram { source, .. } => source.class(),
            _ => ErrorClass::Data,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
