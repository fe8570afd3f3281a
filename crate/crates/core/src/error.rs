use thiserror::Error;

/// Errors raised by the library. Each variant carries enough context for the
/// CLI to print a one-line diagnostic.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("no pair partitions of odd ground set (d = {0})")]
    OddGroundSet(usize),

    #[error("{what} size {requested} exceeds cap {cap}")]
    CapExceeded {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    #[error("empty index vector")]
    EmptyVector,

    #[error("ground-set mismatch: {0} vs {1}")]
    GroundSetMismatch(usize, usize),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("structure matrix is not square: row {row} has {len} entries, expected {n}")]
    NotSquare { row: usize, len: usize, n: usize },

    #[error("structure matrix is asymmetric at ({0}, {1}): {2} != {3}")]
    Asymmetric(usize, usize, f64, f64),

    #[error("structure matrix entry ({0}, {1}) = {2} is outside [-1, 1]")]
    OutOfRange(usize, usize, f64),

    #[error("diagonal entry q({0}, {0}) must be supplied explicitly")]
    MissingDiagonal(usize),

    #[error("structure matrix entry ({0}, {1}) is missing")]
    MissingEntry(usize, usize),

    #[error("label {label} out of range 1..={n}")]
    LabelOutOfRange { label: usize, n: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Gram block of degree {degree} is not positive: min eigenvalue {min_eigenvalue:e}")]
    GramNotPositive { degree: usize, min_eigenvalue: f64 },

    #[error("enumeration budget exceeded ({needed} > {budget}); use Monte Carlo mode")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("element has nonzero mean {0:e}")]
    NonzeroMean(f64),

    #[error("element is not in the one-upper-letter span: {0}")]
    NotInDerivationImage(String),

    #[error("incompatible sign tables")]
    TableMismatch,

    #[error("no witness found: {0}")]
    NoWitness(String),

    #[error("io: {0}")]
    Io(String),

    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
