use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    #[error("graph function is not differentiable at {point:?}")]
    NotDifferentiable { point: Vec<f64> },

    #[error("regularity too low: {0}")]
    RegularityTooLow(String),

    #[error("derivative of order {requested} requested but only order {available} is available")]
    OrderTooHigh { requested: u32, available: u32 },

    #[error("point {0:?} is not covered by any chart")]
    NotCovered(Vec<f64>),

    #[error("uncovered boundary region: partition sum {sum} at chart {chart} node {point:?}")]
    UncoveredBoundary { chart: usize, point: Vec<f64>, sum: f64 },

    #[error("non-finite integrand value at {0:?}")]
    NonFiniteIntegrand(Vec<f64>),

    #[error("order m = {0} is an integer; use the integer-order Sobolev norm")]
    IntegerOrder(f64),

    #[error("boundary subset has zero surface measure")]
    ZeroMeasure,

    #[error("support violation: {0}")]
    SupportViolation(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("norm axiom violation: {0}")]
    NormAxiomViolation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
