use thiserror::Error;

use crate::samplers::ChainOutput;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of a mathematical function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid or inconsistent configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Input data for which a statistic is undefined (e.g. a constant series).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A chain left the finite region. `partial` holds every row recorded
    /// before the divergent iteration.
    #[error("chain diverged at iteration {iter}")]
    Diverged {
        iter: usize,
        last_state: Vec<f64>,
        partial: Box<ChainOutput>,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
