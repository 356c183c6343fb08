use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("shape mismatch in {op}: {left_rows}x{left_cols} vs {right_rows}x{right_cols}")]
    Shape {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    #[error("invalid partition schema: {0}")]
    Schema(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("negative entry {value} at ({row}, {col}) in {matrix}")]
    NegativeEntry {
        matrix: &'static str,
        row: usize,
        col: usize,
        value: f64,
    },

    #[error("column {column} of the transition matrix sums to {sum}, expected 1")]
    NotStochastic { column: usize, sum: f64 },

    #[error("stage `{stage}` failed on key {key:02x?}: {message}")]
    Task {
        stage: String,
        key: Vec<u8>,
        message: String,
    },

    #[error("broadcast entry `{0}` already written in this epoch")]
    DuplicateBroadcast(String),

    #[error("broadcast entry `{0}` not found")]
    MissingBroadcast(String),

    #[error("codec: {0}")]
    Codec(String),

    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn shape(op: &'static str, left: (usize, usize), right: (usize, usize)) -> Self {
        Error::Shape {
            op,
            left_rows: left.0,
            left_cols: left.1,
            right_rows: right.0,
            right_cols: right.1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<bincode::Error> for Error {
    fn from(e: bincode::Error) -> Self {
        Error::Codec(e.to_string())
    }
}
