use thiserror::Error;

/// Errors produced by the simulation and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the region where a model is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter set is inconsistent or violates a structural requirement.
    #[error("configuration error: {0}")]
    Config(String),

    /// The bracket used for the phase-matching solve contains no root.
    #[error("no phase-matching solution: {0}")]
    NoPhaseMatching(String),

    /// A numerical procedure failed to converge.
    #[error("numerical error: {0}")]
    Numeric(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
