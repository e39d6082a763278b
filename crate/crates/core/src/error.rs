use thiserror::Error;

/// Errors raised by the library. The variants map onto the CLI exit codes
/// (domain 2, resource 3, computation 4).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A requested enumeration or tensor rule exceeds the work budget.
    #[error("resource error: {0}")]
    Resource(String),
    /// A numerical defect was detected while computing.
    #[error("computation error: {0}")]
    Computation(String),
    /// The integrand does not provide what the operation needs (e.g. partials).
    #[error("capability error: {0}")]
    Capability(String),
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! domain_err {
    ($($arg:tt)*) => { $crate::error::Error::Domain(format!($($arg)*)) };
}
pub(crate) use domain_err;
