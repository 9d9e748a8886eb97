use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A numerical solver did not meet its residual or bracketing contract.
    #[error("solver failure: {0}")]
    Solver(String),
    /// A feedback code or strategy table is inconsistent or incomplete.
    #[error("malformed code: {0}")]
    MalformedCode(String),
    /// A certificate check failed.
    #[error("certification failed: {0}")]
    Certification(String),
    #[error("optimization failed: {0}")]
    Optimization(String),
    /// A configured size, depth or node cap was exceeded.
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable code, used in CLI error records.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain_error",
            Error::Solver(_) => "solver_failure",
            Error::MalformedCode(_) => "malformed_code",
            Error::Certification(_) => "certification_error",
            Error::Optimization(_) => "optimization_error",
            Error::Resource(_) => "resource_error",
            Error::Io(_) => "io_error",
            Error::Json(_) => "json_error",
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
