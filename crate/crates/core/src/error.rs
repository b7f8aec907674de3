use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("dataset too small: {n} views, at least {min} required")]
    DatasetTooSmall { n: usize, min: usize },

    #[error("candidate set exhausted")]
    Exhausted,

    #[error("non-finite loss on ray {ray}")]
    NonFinite { ray: usize },

    #[error("training diverged at iteration {iteration}: loss {loss} exceeds {limit}")]
    Divergence {
        iteration: usize,
        loss: f64,
        limit: f64,
    },

    #[error("format error in {context}: {message}")]
    Format { context: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn format(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Format {
            context: context.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
