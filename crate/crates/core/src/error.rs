use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter lies outside the physical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The adaptive Fock truncation would exceed the configured cap.
    #[error("truncation needs pair index beyond cap {cap} (z = {z})")]
    Truncation { cap: usize, z: f64 },
    /// The derivative-formula oracle only handles small instances.
    #[error("oracle refused: {0}")]
    OracleCap(String),
    #[error("witness undefined: {0}")]
    UndefinedWitness(&'static str),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("grid mismatch: {left} vs {right}")]
    GridMismatch { left: usize, right: usize },
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}
