use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("|0|^{exponent} diverges")]
    SingularPower { exponent: f64 },

    #[error("{family} does not support {operation}")]
    UnsupportedFamily { family: &'static str, operation: &'static str },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("potential is not finite at node {node} (q = {q}); the domain is probably too wide")]
    PotentialOverflow { node: usize, q: f64 },

    #[error("potential never reaches energy {energy} within the scan range")]
    TurningPointNotFound { energy: f64 },

    #[error("eigensolver did not converge: {converged} of {requested} pairs converged")]
    NoConvergence { converged: usize, requested: usize },

    #[error("matrix of order {order} exceeds the limit of {limit}")]
    TooLarge { order: usize, limit: usize },

    #[error("analysis needs {needed} values, got {got}")]
    TooFewValues { needed: usize, got: usize },

    #[error("power-law fit needs positive energies, E_{n} = {energy}")]
    NonPositiveEnergy { n: usize, energy: f64 },

    #[error("grid is not symmetric about q = 0")]
    AsymmetricGrid,

    #[error("every sweep point failed; first failure: {0}")]
    SweepFailed(String),

    #[error("config error at line {line}, column {column}: {message}")]
    ConfigSyntax { line: usize, column: usize, message: String },

    #[error("config error in `{key}`: {message}")]
    ConfigValue { key: String, message: String },

    #[error("unknown figure `{0}`")]
    UnknownFigure(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
