use thiserror::Error;

/// Errors raised by the grid, norm, atom, transform and operator layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension must be 1 or 2, got {0}")]
    UnsupportedDimension(usize),

    #[error("samples per axis must be a power of two >= 8, got {0}")]
    NotPowerOfTwo(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite value at sample {index}")]
    NonFinite { index: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("empty cube family: {0}")]
    EmptyFamily(String),

    #[error("coefficient cube {0} is not contained in any cube of the family")]
    UncoveredCoefficient(String),

    #[error("function is not supported in the cube (leak {leak:e})")]
    NotSupportedInCube { leak: f64 },

    #[error("ill-conditioned moment system: {0}")]
    IllConditioned(String),

    #[error("degenerate construction: {0}")]
    Degenerate(String),

    #[error("support does not fit in the grid box: {0}")]
    SupportOverflow(String),

    #[error("zero denominator: {0}")]
    ZeroDenominator(&'static str),

    #[error("kernel integral vanishes")]
    VanishingKernelIntegral,

    #[error("cutoff search failed: {0}")]
    CutoffSearch(String),

    #[error("unresolved frequency: {0}")]
    Unresolved(String),

    #[error("step size underflow in finite differences")]
    StepUnderflow,

    #[error("unknown symbol spec `{0}`")]
    UnknownSymbol(String),

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("io: {0}")]
    Io(String),

    #[error("serialization: {0}")]
    Serde(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
