use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain of the model (odd chain length,
    /// negative coupling, non-finite value, ...).
    #[error("parameter out of domain: {0}")]
    Parameter(String),

    /// Physical inputs that violate an approximation the model relies on.
    #[error("model validity violated: {0}")]
    Validity(String),

    /// The request is too large for an exact path (dense oracle, line
    /// enumeration, sample count).
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// A configuration document failed validation. Every violation is
    /// listed with its field path.
    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("branch n={0} is required but not present in the mode table")]
    MissingBranch(usize),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn capacity(msg: impl Into<String>) -> Self {
        Error::Capacity(msg.into())
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Capacity(_) => 3,
            _ => 2,
        }
    }
}
