use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    /// The error record was already written; only the exit code remains.
    #[error("{0}")]
    Reported(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Reported(_) => 2,
            CliError::Io { .. } => 3,
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }
}

impl From<pcd_epp::Error> for CliError {
    fn from(e: pcd_epp::Error) -> Self {
        CliError::Config(e.to_string())
    }
}
