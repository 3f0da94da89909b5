use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("bandwidth {k} is out of range for a graph with {n} nodes")]
    InvalidBandwidth { k: usize, n: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("diffusion step {epsilon} outside the stable range (0, {max}]")]
    UnstableStep { epsilon: f64, max: f64 },

    #[error("no connected graph found within {0} attempts")]
    ConnectivityNotReached(usize),

    #[error("edge list line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("uncontrollable instance: {0}")]
    Uncontrollable(String),

    #[error("ill-conditioned system: {0}")]
    IllConditioned(String),

    #[error("no feasible driving node in greedy round {round}")]
    NoFeasibleCandidate { round: usize },

    #[error("serialization: {0}")]
    Serialization(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
