use thiserror::Error;

/// Errors raised across the crate.
///
/// The variants map onto distinct failure classes so front ends can pick
/// an exit status without inspecting messages.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Input data is missing, malformed or inconsistent.
    #[error("data error: {0}")]
    Data(String),

    /// A numerical procedure failed to produce a usable value.
    #[error("numerical failure: {0}")]
    Numeric(String),

    /// An inversion problem has no solution for the given input.
    #[error("no solution: {0}")]
    NoSolution(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn data<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Data(msg.into()))
}
