use thiserror::Error;

/// Errors surfaced by the library. The variants map to distinct CLI exit
/// codes, so keep configuration, I/O and domain failures separate.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration value or malformed config/fixture syntax.
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A value violated a model invariant (reward outside its domain,
    /// degenerate instance, unsupported reward type for a policy, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Rating-corpus ingestion failure (empty input, unknown arm, ...).
    #[error("ingest error: {0}")]
    Ingest(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn ingest(msg: impl Into<String>) -> Self {
        Error::Ingest(msg.into())
    }
}
