use thiserror::Error;

/// Errors raised by profile calculus, spectral computations and verifiers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("negative argument {0}")]
    NegativeArgument(f64),

    #[error("argument must be strictly positive, got {0}")]
    NonPositiveArgument(f64),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("divergent transform: {0}")]
    Divergent(String),

    #[error("missing exponential tail descriptor")]
    MissingTail,

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not self-adjoint (residual {0:e})")]
    NotSelfAdjoint(f64),

    #[error("operator is not positive: eigenvalue {0:e} below tolerance")]
    NotPositive(f64),

    #[error("invalid measure space: {0}")]
    InvalidSpace(String),

    #[error("empty region")]
    EmptyRegion,

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("state lies in the kernel of the operator")]
    StateInKernel,

    #[error("zero state")]
    ZeroState,

    #[error("state has zero energy")]
    ZeroEnergy,

    #[error("state has a kernel component (relative size {0:e}) where the ]0, lambda] flavor forbids one")]
    KernelComponent(f64),

    #[error("state is not supported in the region (residual {0:e})")]
    SupportViolation(f64),

    #[error("profile C*lambda^{alpha} does not dominate the spectral profile at lambda = {lambda} ({value} > {bound})")]
    NotDominated {
        alpha: f64,
        lambda: f64,
        value: f64,
        bound: f64,
    },

    #[error("grid too coarse: refinement error {estimate:e} exceeds tolerance {tolerance:e}")]
    GridTooCoarse { estimate: f64, tolerance: f64 },

    #[error("invalid complex: {0}")]
    InvalidComplex(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
