use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of a closed-form relation.
    #[error("{what} = {value} is outside the admissible range {range}")]
    Domain {
        what: &'static str,
        value: f64,
        range: String,
    },

    /// Momentum density at or above the sonic maximum of ρ(q²)q.
    #[error("momentum density {0} has no subsonic root (sonic maximum is 1)")]
    InfeasibleFlux(f64),

    #[error("truncation blend is not elliptic: lower bound {lambda} <= 0")]
    Ellipticity { lambda: f64 },

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("point {point:?} lies outside the {domain}")]
    OutOfDomain {
        point: Vec<f64>,
        domain: &'static str,
    },

    #[error("invalid resolution: {0}")]
    InvalidResolution(String),

    #[error("station x_n = {station} outside the open interval (-{half_length}, {half_length})")]
    StationOutOfRange { station: f64, half_length: f64 },

    #[error(
        "newton iteration did not converge after {iterations} iterations (residual {residual:.3e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("line search failed at iteration {iteration} (residual {residual:.3e})")]
    LineSearch { iteration: usize, residual: f64 },

    #[error("linear solver failed: {0}")]
    LinearSolver(String),

    #[error("bracket failure: smallest flux {m0} did not certify")]
    Bracket { m0: f64 },

    #[error("config error at line {line}: key '{key}': {message}")]
    Config {
        line: usize,
        key: String,
        message: String,
    },

    #[error("snapshot parse error at line {line}: {message}")]
    Snapshot { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64, range: impl Into<String>) -> Self {
        Error::Domain {
            what,
            value,
            range: range.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
