use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the solver, the application layers and the file loaders.
#[derive(Debug, Error)]
pub enum SfpError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("ill-posed instance: non-finite objective at x = {x}")]
    NonFiniteObjective { x: f64 },

    #[error("non-finite integrand at node {node:?}")]
    NonFiniteIntegrand { node: Vec<f64> },

    #[error("dual point lies outside the domain of the dual function")]
    OutsideDualDomain,

    #[error("support refinement is implemented for one-dimensional domains only (got dimension {0})")]
    UnsupportedDimension(usize),

    #[error("saturation hypothesis fails at beta = {beta}: minimizer {x} is neither 0 nor +/-{bound}")]
    SaturationViolated { beta: f64, x: f64, bound: f64 },

    #[error("non-finite constraint value at z = +/-{alpha}; try a different alpha")]
    NonFiniteConstraint { alpha: f64 },

    #[error("no accepted iterate")]
    NoAcceptedIterate,

    #[error("training set needs both labels")]
    SingleClass,

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("unknown config key `{0}`")]
    UnknownConfigKey(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, SfpError>;

impl SfpError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SfpError::Io {
            path: path.into(),
            source,
        }
    }
}
