use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("empty input")]
    EmptyInput,
    #[error("format error at line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("genome references variable x{index} but data has {n} columns")]
    Binding { index: usize, n: usize },
    #[error("genome syntax error: {0}")]
    Syntax(String),
    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),
    #[error("missing runs: {}", .0.join(", "))]
    Coverage(Vec<String>),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("degenerate sample: {0}")]
    Degenerate(String),
    #[error("synthetic spec error: {0}")]
    Spec(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short stable identifier, used as the machine-readable error prefix.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::EmptyInput => "empty-input",
            Error::Format { .. } => "format",
            Error::Parse { .. } => "parse",
            Error::Shape(_) => "shape",
            Error::Parameter(_) => "parameter",
            Error::Binding { .. } => "binding",
            Error::Syntax(_) => "syntax",
            Error::UndefinedCorrelation(_) => "undefined-correlation",
            Error::Coverage(_) => "coverage",
            Error::Protocol(_) => "protocol",
            Error::Degenerate(_) => "degenerate",
            Error::Spec(_) => "spec",
        }
    }
}
