use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("alphabet error: {0}")]
    Alphabet(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty class: {0}")]
    EmptyClass(&'static str),

    #[error("config error: {0}")]
    Config(String),

    #[error("incompatible runs: {0}")]
    Incompatible(String),

    #[error("malformed file {path}: {reason}")]
    Format { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
