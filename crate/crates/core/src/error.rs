use thiserror::Error;

/// Error taxonomy shared by every module in the crate.
///
/// `Config` covers invalid parameters, `Domain` covers inputs outside an
/// operation's mathematical domain, `Resource` covers refusals where the
/// requested computation would exceed a guarded budget (enumeration depth,
/// acceptance floor, quadrature grid too coarse, ...), and `Numerical`
/// covers solver non-convergence. The CLI maps `Resource` to its own exit
/// code so scripted callers can distinguish "won't" from "can't".
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }
    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
