use std::path::PathBuf;

use lakebench_core::eval::AggregateError;
use lakebench_core::formats::BadRenderConfig;
use lakebench_core::gen::SplitError;
use lakebench_core::trace::TraceError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{}:{line}: {source}", path.display())]
    JsonLine {
        path: PathBuf,
        line: usize,
        source: serde_json::Error,
    },
    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Aggregate(#[from] AggregateError),
    #[error(transparent)]
    Render(#[from] BadRenderConfig),
    #[error("map {0:?} has no solution")]
    Unsolvable(String),
    #[error("png encoding: {0}")]
    Png(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Json { .. } | Error::JsonLine { .. } => "json",
            Error::Config(_) => "config",
            Error::Split(_) => "generation",
            Error::Trace(_) => "trace",
            Error::Aggregate(_) => "aggregate",
            Error::Render(_) => "config",
            Error::Unsolvable(_) => "unsolvable",
            Error::Png(_) => "png",
            Error::Csv(_) => "csv",
        }
    }

    /// Individual problems, for configuration errors.
    pub fn details(&self) -> Vec<String> {
        match self {
            Error::Config(v) => v.clone(),
            _ => Vec::new(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) trait IoContext<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T>;
}

impl<T> IoContext<T> for std::io::Result<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|source| Error::Io {
            path: path.into(),
            source,
        })
    }
}
