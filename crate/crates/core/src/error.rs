use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// `context` is either a source position or a field path such as `gates[3].cycle`.
    #[error("parse error at {context}: {message}")]
    Parse { context: String, message: String },

    /// A collective was entered with inconsistent arguments across ranks.
    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("state of {qubits} qubits needs {required} bytes, over the {cap} byte memory cap")]
    MemoryCap { qubits: usize, required: u128, cap: u128 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
