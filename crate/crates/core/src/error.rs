use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count {0} outside supported range 1..={max}", max = crate::statevector::MAX_QUBITS)]
    Size(usize),

    #[error("index {index} out of range for {len} {what}")]
    Index {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("non-finite value encountered at {at}: {detail}")]
    Numeric { at: f64, detail: String },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("dataset is empty after removing rows with missing values")]
    EmptyDataset,

    #[error("metric undefined: {0}")]
    UndefinedMetric(&'static str),

    #[error("every grid cell failed; first failure: {0}")]
    Grid(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn index(what: &'static str, index: usize, len: usize) -> Self {
        Error::Index { what, index, len }
    }

    /// Wraps the error with a human-readable context prefix.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
