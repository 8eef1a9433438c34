use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("graph on {n} agents is not connected")]
    Disconnected { n: usize },

    #[error("no connected sample for n={n}, edge_prob={edge_prob} after {attempts} attempts")]
    NoConnectedSample { n: usize, edge_prob: f64, attempts: usize },

    #[error("iterate diverged at k={k}, agent {agent} (value {value})")]
    Divergence { k: usize, agent: usize, value: f64 },

    #[error("step size {alpha} is not admissible for mu={mu}, L={lip}")]
    InadmissibleStepSize { alpha: f64, mu: f64, lip: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
