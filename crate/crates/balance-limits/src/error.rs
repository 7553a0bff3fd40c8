use std::path::PathBuf;

use balance_limits_core::Error as CoreError;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

/// Process exit status for a successful run.
pub const EXIT_OK: i32 = 0;
/// Filesystem or serialization failure.
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
/// Domain violation, singularity or other numerical precondition failure.
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_INCONCLUSIVE: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed invocation or configuration file.
    #[error("invalid {param}: {reason}")]
    Usage { param: String, reason: String },

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: CoreError,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{what}: {source}")]
    Csv {
        what: String,
        #[source]
        source: csv::Error,
    },

    #[error("{what}: {source}")]
    Json {
        what: String,
        #[source]
        source: serde_json::Error,
    },

    /// Input data that parsed but violates its schema.
    #[error("invalid {param}: {reason}")]
    Data { param: String, reason: String },
}

impl CliError {
    pub fn usage(param: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Usage {
            param: param.into(),
            reason: reason.into(),
        }
    }

    pub fn data(param: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Data {
            param: param.into(),
            reason: reason.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage { .. } => EXIT_USAGE,
            CliError::Core { source, .. } => match source {
                CoreError::Inconclusive { .. } => EXIT_INCONCLUSIVE,
                _ => EXIT_DOMAIN,
            },
            CliError::Data { .. } => EXIT_DOMAIN,
            CliError::Io { .. } | CliError::Csv { .. } | CliError::Json { .. } => EXIT_IO,
        }
    }
}

/// Attaches a description of the failing computation to a core error.
pub trait CoreContext<T> {
    fn context(self, what: &str) -> Result<T>;
}

impl<T> CoreContext<T> for std::result::Result<T, CoreError> {
    fn context(self, what: &str) -> Result<T> {
        self.map_err(|source| CliError::Core {
            context: what.to_string(),
            source,
        })
    }
}
