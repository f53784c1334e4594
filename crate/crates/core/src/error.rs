use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("kernel order must be at least 1")]
    ZeroOrder,

    #[error("exponent r must exceed 1, got {0}")]
    ExponentTooSmall(f64),

    #[error("times must be strictly increasing (index {index}: {prev} then {next})")]
    NonIncreasingTimes { index: usize, prev: f64, next: f64 },

    #[error("time {value} at index {index} lies outside [-pi, pi]")]
    TimeOutOfRange { index: usize, value: f64 },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error(
        "coefficient band too narrow: index {requested} requested, table covers |q| <= {available}"
    )]
    BandTooNarrow { requested: i64, available: usize },

    #[error("coefficient table is not conjugate-symmetric at q = {q} (deviation {deviation:e})")]
    NotConjugateSymmetric { q: i64, deviation: f64 },

    #[error("trigonometric polynomial has imaginary residue {residue:e} at t = {t}")]
    ImaginaryResidue { t: f64, residue: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: String,
        reason: &'static str,
    },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("observation grid point {time} is not covered by the simulation grid")]
    NotCovered { time: f64 },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, value: impl ToString, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value: value.to_string(),
            reason,
        }
    }
}
