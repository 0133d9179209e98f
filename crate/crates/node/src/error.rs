use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Code(#[from] pmpir_core::Error),
    #[error("corrupt store: {0}")]
    CorruptStore(String),
    #[error("header mismatch: {0}")]
    HeaderMismatch(String),
    #[error("malformed frame: {0}")]
    MalformedFrame(String),
    #[error("unexpected message: {0}")]
    Protocol(String),
    #[error("empty database")]
    EmptyDatabase,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type SimResult<T> = Result<T, SimError>;
