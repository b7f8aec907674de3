use std::path::PathBuf;

/// Errors surfaced by the command-line front end, each mapped to an exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: nbv_core::Error,
    },

    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },
}

impl CliError {
    pub fn core(context: impl Into<String>) -> impl FnOnce(nbv_core::Error) -> Self {
        let context = context.into();
        move |source| CliError::Core { context, source }
    }

    pub fn data(path: impl Into<PathBuf>, message: impl std::fmt::Display) -> Self {
        CliError::Data {
            path: path.into(),
            message: message.to_string(),
        }
    }

    /// 0 success, 2 configuration, 3 data, 4 numeric divergence.
    pub fn exit_code(&self) -> i32 {
        use nbv_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Data { .. } => 3,
            CliError::Core { source, .. } => match source {
                E::InvalidInput(_) => 2,
                E::Divergence { .. } | E::NonFinite { .. } => 4,
                _ => 3,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
