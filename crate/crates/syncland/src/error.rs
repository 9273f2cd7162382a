use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {what} (expected {expected}, found {found})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("entry {index} is not a unit-modulus sign (value {value})")]
    NotUnitModulus { index: usize, value: f64 },

    #[error("row {row} of the sphere configuration has norm {norm}, expected 1")]
    NotOnSphere { row: usize, norm: f64 },

    #[error("preconditioner not positive: entry {index} is {value}")]
    PreconditionerNotPositive { index: usize, value: f64 },

    #[error("retraction singularity at row {row}: the step cancels the point")]
    RetractionSingularity { row: usize },

    #[error("eigensolver failed to converge on a {n}x{n} matrix: {detail}")]
    EigenSolver { n: usize, detail: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("simulation produced a non-finite state at t = {time}")]
    SimulationBlowUp { time: f64 },

    #[error("random regular graph generation failed after {attempts} attempts (n = {n}, d = {d})")]
    GenerationFailed { n: usize, d: usize, attempts: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("grid file: {0}")]
    Toml(#[from] toml::de::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
