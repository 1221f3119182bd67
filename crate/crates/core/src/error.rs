use std::path::PathBuf;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("series must contain at least {min} values, got {len}")]
    SeriesTooShort { len: usize, min: usize },

    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("input of length {len} is shorter than the subsequence length {required}")]
    InputTooShort { len: usize, required: usize },

    #[error("query length {query} is shorter than the graph subsequence length {l}")]
    QueryTooShort { query: usize, l: usize },

    #[error("sequence is constant (zero standard deviation)")]
    ConstantSequence,

    #[error("sequences differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("principal component {component} is degenerate (rank too low)")]
    DegenerateRank { component: usize },

    #[error("bandwidth undefined for {count} radii with spread {spread}")]
    DegenerateBandwidth { count: usize, spread: f64 },

    #[error("projection never crosses any ray: no pattern nodes can be extracted")]
    EmptyProjection,

    #[error("invalid annotation: {0}")]
    InvalidAnnotation(String),

    #[error("anomaly placement failed: {0}")]
    Placement(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization: {0}")]
    Serde(String),

    #[error("unsupported format version {found}, expected {expected}")]
    Version { found: u32, expected: u32 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
