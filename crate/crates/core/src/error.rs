use thiserror::Error;

/// Errors raised by the synchronization toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or configuration value is outside its valid domain.
    #[error("configuration error: {0}")]
    Config(String),

    /// An input value violates the contract of the operation it was passed to.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A constructed object failed its own validation.
    #[error("construction error: {0}")]
    Construction(String),

    /// A correlation window reaches outside the received buffer.
    #[error("window error: {0}")]
    Window(String),

    /// The estimator was given data it cannot extract a value from.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) => 3,
            _ => 2,
        }
    }
}
