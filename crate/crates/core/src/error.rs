use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(
        "precision envelope violated: {precision} targets are validated up to T = {max_t:.3}, requested T = {requested:.3}"
    )]
    PrecisionEnvelope {
        precision: String,
        max_t: f64,
        requested: f64,
    },
    #[error("integer overflow: {0}")]
    Overflow(String),
    #[error("degenerate approximate: block {block} of (p + theta q, q) is zero")]
    Degenerate { block: usize },
    #[error("shape undefined: coordinate {index} of (p + theta q, q) is zero")]
    ShapeUndefined { index: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("candidate-cell budget exceeded: {cells} cells > {budget}")]
    CellBudget { cells: f64, budget: f64 },
    #[error("flow exponent {0} outside the guarded range |t| <= 700")]
    FlowOverflow(f64),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("sparse classes: expected count {expected:.3} < 5 per class")]
    SparseClasses { expected: f64 },
    #[error("degenerate regression design: {0}")]
    DegenerateDesign(String),
    #[error("lattice membership solve failed: {0}")]
    MembershipSolve(String),
    #[error("unknown experiment: {0}")]
    UnknownExperiment(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
