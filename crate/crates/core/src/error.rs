use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised anywhere in the crate.
///
/// The variants fall into three families that the command-line surface maps
/// onto exit codes: configuration (`Config`), data (`Io`, `Parse`,
/// `Validation`, `Structural`) and runtime/numeric (`Shape`, `Numeric`,
/// `Diverged`).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{location}: {message}")]
    Parse { location: String, message: String },

    #[error("claim {claim_id}: {reason}")]
    Validation { claim_id: String, reason: String },

    #[error("structural error: {0}")]
    Structural(String),

    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("training diverged at epoch {epoch}: {reason}")]
    Diverged { epoch: usize, reason: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn invalid(claim_id: &str, reason: impl Into<String>) -> Self {
        Error::Validation {
            claim_id: claim_id.to_string(),
            reason: reason.into(),
        }
    }

    /// Process exit code for this error: 1 config, 2 data, 3 runtime.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Io { .. } | Error::Parse { .. } | Error::Validation { .. } | Error::Structural(_) => 2,
            Error::Shape { .. } | Error::Numeric(_) | Error::Diverged { .. } => 3,
        }
    }
}
