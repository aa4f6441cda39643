use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, ServiceError>;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Core(#[from] drjudge::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("archive: {0}")]
    Archive(String),
}

impl ServiceError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            context: path.into().display().to_string(),
            source,
        }
    }

    /// Process exit code: 2 for bad input, 3 for numerical failure, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use drjudge::Error as E;
        match self {
            Self::Config(_) | Self::NotFound(_) | Self::Precondition(_) | Self::Archive(_) => 2,
            Self::Io { .. } => 1,
            Self::Core(e) => match e {
                E::Structural(_)
                | E::Data(_)
                | E::Parameter(_)
                | E::Validation { .. }
                | E::Conflict(_)
                | E::UndefinedMetric { .. }
                | E::Csv(_)
                | E::Json(_) => 2,
                E::Numerical(_)
                | E::DegenerateEmbedding(_)
                | E::DegeneratePlot(_)
                | E::DisconnectedGraph { .. }
                | E::Training(_) => 3,
                E::Io { .. } => 1,
            },
        }
    }

    /// HTTP status for the API.
    pub fn status(&self) -> u16 {
        use drjudge::Error as E;
        match self {
            Self::NotFound(_) => 404,
            Self::Precondition(_) => 422,
            Self::Config(_) | Self::Archive(_) => 400,
            Self::Io { .. } => 500,
            Self::Core(e) => match e {
                E::Conflict(_) => 409,
                E::UndefinedMetric { .. } => 422,
                E::Structural(_) | E::Data(_) | E::Parameter(_) | E::Validation { .. } | E::Csv(_) | E::Json(_) => 400,
                _ => 500,
            },
        }
    }
}
