use thiserror::Error;

/// Error classes map one-to-one onto the CLI exit codes: validation 3,
/// resource 4, decode 5. Degenerate inputs (such as recovering a gate at
/// theta = 1) are a distinct class so callers can tell them apart from
/// malformed input, but they share the validation exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation: {0}")]
    Validation(String),
    #[error("resource: {0}")]
    Resource(String),
    #[error("decode: {0}")]
    Decode(String),
    #[error("degenerate: {0}")]
    Degenerate(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }

    pub fn decode(msg: impl Into<String>) -> Self {
        Error::Decode(msg.into())
    }

    pub fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }
}
