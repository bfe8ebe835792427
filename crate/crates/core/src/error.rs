use thiserror::Error;

/// Errors raised while reading a checkpoint or affine file.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic bytes {0:?}, expected \"PINR\"")]
    BadMagic([u8; 4]),
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),
    #[error("file truncated while reading {0}")]
    Truncated(String),
    #[error("record mismatch: {0}")]
    RecordMismatch(String),
    #[error("invalid config json: {0}")]
    Config(String),
    #[error("invalid image: {0}")]
    Image(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("dimension mismatch at node {node} ({op}): {detail}")]
    Dimension {
        node: usize,
        op: &'static str,
        detail: String,
    },
    #[error("tape state: {0}")]
    State(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("non-finite value during evaluation: {0}")]
    Evaluation(String),
    #[error("training failed: {0}")]
    Training(String),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    /// Process exit code used by the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Argument(_) | Error::Dimension { .. } => 2,
            Error::Format(_) => 3,
            Error::Precondition(_)
            | Error::Evaluation(_)
            | Error::Training(_)
            | Error::State(_) => 4,
            Error::Io(_) => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
