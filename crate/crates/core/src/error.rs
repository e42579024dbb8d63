use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("polytope has {count} vertices, above the cap of {cap}")]
    TooManyVertices { count: u128, cap: usize },

    #[error("set is unbounded: {0}")]
    Unbounded(String),

    #[error("infeasible bounds: lower {lower} > upper {upper}")]
    InfeasibleBounds { lower: usize, upper: usize },

    #[error("invalid polytope: {0}")]
    InvalidPolytope(String),

    /// Iterative solver stopped at its iteration cap. Carries the best iterate.
    #[error("not converged after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        best: Vec<f64>,
        residual: f64,
        iterations: usize,
    },

    #[error("target is not inside the projection set")]
    TargetOutsideSet,

    #[error("invalid label: {0}")]
    InvalidLabel(String),

    #[error("unknown loss: {0}")]
    UnknownLoss(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("line search failed: {0}")]
    LineSearchFailed(String),

    #[error("sample {index}: {source}")]
    AtSample {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: index {index} out of range (limit {limit})")]
    IndexOutOfRange {
        line: usize,
        index: usize,
        limit: usize,
    },

    #[error("row {row}: ranking is not a permutation of 1..{k}")]
    NotAPermutation { row: usize, k: usize },

    #[error("unsupported model format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("malformed model file: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
