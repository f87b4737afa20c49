use thiserror::Error;

/// Crate-wide error type. The CLI maps each variant family to a distinct
/// process exit code, so keep parse/config/training failures separable.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("label error at line {line}: found {found:?}, expected +1 or -1 (use the 0/1 remap option for 0/1-labeled files)")]
    Label { line: usize, found: String },

    #[error("partition error: {0}")]
    Partition(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("infeasible census: {0}")]
    Infeasible(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI (0 is success, 2 is reserved for
    /// command-line usage errors).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Label { .. } => 3,
            Error::Config(_) | Error::Partition(_) | Error::Infeasible(_) => 4,
            Error::Training(_) => 5,
            Error::Io(_) => 6,
        }
    }
}
