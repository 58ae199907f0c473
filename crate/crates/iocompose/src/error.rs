use std::path::PathBuf;

/// Exit status for a successful run.
pub const EXIT_OK: i32 = 0;
pub const EXIT_UNSOLVABLE: i32 = 2;
pub const EXIT_INVALID_INPUT: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{file}:{line}: {message}")]
    Parse { file: String, line: usize, message: String },

    #[error(transparent)]
    Core(#[from] iocompose_core::Error),

    #[error("invalid parameters: {0}")]
    Params(String),

    #[error("request is unsolvable: {0}")]
    Unsolvable(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Unsolvable(_) => EXIT_UNSOLVABLE,
            Error::Invariant(_) => EXIT_INVARIANT,
            Error::Io { .. } | Error::Parse { .. } | Error::Core(_) | Error::Params(_) => EXIT_INVALID_INPUT,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
