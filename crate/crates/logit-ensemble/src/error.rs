use thiserror::Error;

/// Errors produced by the ensemble library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("node index {index} out of range for {node_count} nodes")]
    NodeIndex { index: usize, node_count: usize },

    #[error("feature dimension mismatch: model expects {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("label must be 0 or 1, got {0}")]
    InvalidLabel(u8),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid model shape: {0}")]
    InvalidShape(String),

    #[error("cost became non-finite at iteration {iteration}")]
    Diverged { iteration: usize },

    #[error("csv parse error at row {row}, column {column}: {message}")]
    CsvCell {
        row: usize,
        column: String,
        message: String,
    },

    #[error("missing target column {target:?}; available columns: {available:?}")]
    MissingTarget {
        target: String,
        available: Vec<String>,
    },

    #[error("column {0:?} has zero variance; cannot standardize")]
    ZeroVariance(String),

    #[error("label encoding with threshold {threshold} is degenerate: all labels are {label}; choose a different threshold")]
    DegenerateLabels { threshold: i64, label: u8 },

    #[error("split leaves one side empty (K={total}, ratio={ratio})")]
    EmptySplit { total: usize, ratio: f64 },

    #[error("ROC requires both classes present in the labels")]
    SingleClass,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },

    #[error("json error on {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
