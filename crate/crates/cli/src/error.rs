use thiserror::Error;

/// Failure classes, each with its own exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config or input data.
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    /// A result violated an invariant the library guarantees.
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Io(_) => 3,
            Self::Internal(_) => 4,
        }
    }

    pub fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        Self::Io(format!("{}: {e}", path.display()))
    }
}

impl From<bottomup::Error> for CliError {
    fn from(e: bottomup::Error) -> Self {
        Self::Usage(e.to_string())
    }
}
