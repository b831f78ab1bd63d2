use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid size: {what} requires at least {min} players, got {got}")]
    InvalidSize {
        what: &'static str,
        min: usize,
        got: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("player index {index} out of range for {n} players")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("failed to parse matrix file {path}: {reason}")]
    MatrixParse { path: PathBuf, reason: String },

    #[error("matrix is not square: {rows} rows, row {row} has {cols} columns")]
    NonSquare {
        rows: usize,
        row: usize,
        cols: usize,
    },

    #[error("entry ({i},{j}) = {value} is not a probability")]
    ProbabilityRange { i: usize, j: usize, value: f64 },

    #[error("antisymmetry violated at ({i},{j}): p_ij + p_ji = {sum}")]
    Antisymmetry { i: usize, j: usize, sum: f64 },

    #[error("diagonal entry ({i},{i}) = {value}, expected 0.5")]
    Diagonal { i: usize, value: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("batch holds {got} records, expected {expected}")]
    IncompleteBatch { got: usize, expected: usize },

    #[error("MLE did not converge after {iterations} iterations (gradient norm {grad_norm:e})")]
    Solver {
        iterations: usize,
        grad_norm: f64,
        last: Vec<f64>,
    },

    #[error("estimate requested before warmup completed")]
    NotReady,

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("config key `{key}`: cannot parse `{value}` as {expected}")]
    TypeMismatch {
        key: String,
        value: String,
        expected: &'static str,
    },

    #[error("config key `{key}`: {reason}")]
    Invariant { key: String, reason: String },

    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable code, used by the CLI's JSON error output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidSize { .. } => "invalid_size",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::MatrixParse { .. } => "matrix_parse",
            Error::NonSquare { .. } => "non_square",
            Error::ProbabilityRange { .. } => "probability_range",
            Error::Antisymmetry { .. } => "antisymmetry",
            Error::Diagonal { .. } => "diagonal",
            Error::Config(_) => "config",
            Error::IncompleteBatch { .. } => "incomplete_batch",
            Error::Solver { .. } => "solver",
            Error::NotReady => "not_ready",
            Error::UnknownKey(_) => "unknown_key",
            Error::TypeMismatch { .. } => "type_mismatch",
            Error::Invariant { .. } => "invariant",
            Error::UnknownAlgorithm(_) => "unknown_algorithm",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }
}
