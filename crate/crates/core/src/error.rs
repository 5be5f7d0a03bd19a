use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument outside the domain of a combinatorial function.
    #[error("domain error: {0}")]
    Domain(String),
    /// Internal bookkeeping is inconsistent. Indicates a bug.
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("graph error: {0}")]
    Graph(String),
    #[error("graph is disconnected: component sizes {sizes:?}")]
    Disconnected { sizes: Vec<usize> },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
