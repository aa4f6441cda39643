use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the scoring and ranking pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Shapes or references that do not line up (row counts, feature lengths).
    #[error("structural error: {0}")]
    Structural(String),

    /// Input data violates a domain invariant (non-finite values, empty input).
    #[error("data error: {0}")]
    Data(String),

    /// A caller-supplied parameter is outside its valid range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A metric is mathematically undefined on this input.
    #[error("undefined metric {metric}: {reason}")]
    UndefinedMetric { metric: &'static str, reason: String },

    /// The embedding collapses in a way the requested computation cannot handle.
    #[error("degenerate embedding: {0}")]
    DegenerateEmbedding(String),

    /// The scatterplot geometry is degenerate.
    #[error("degenerate plot: {0}")]
    DegeneratePlot(String),

    /// A neighborhood graph is not connected.
    #[error("graph error: neighborhood graph has {components} connected components")]
    DisconnectedGraph { components: usize },

    /// An iterative solver failed to converge or produced non-finite values.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A model could not be trained on the given data.
    #[error("training error: {0}")]
    Training(String),

    /// A trial record violates the rating constraints.
    #[error("validation error [{constraint}]: {detail}")]
    Validation { constraint: &'static str, detail: String },

    /// Another record with the same id but different content already exists.
    #[error("conflict: {0}")]
    Conflict(String),

    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by invalid input rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Numerical(_) | Error::Io { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
