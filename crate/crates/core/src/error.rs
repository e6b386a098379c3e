use std::path::PathBuf;

/// Errors produced by dataset construction, fitting, persistence and the
/// evaluation harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dataset is empty")]
    EmptyDataset,

    #[error("labels length {labels} does not match row count {rows}")]
    LabelLengthMismatch { labels: usize, rows: usize },

    #[error("label {label} out of range for {class_count} classes")]
    LabelOutOfRange { label: usize, class_count: usize },

    #[error("class {class} has no members")]
    EmptyClass { class: usize },

    #[error("non-finite value at row {row}, column {column}")]
    NonFiniteValue { row: usize, column: usize },

    #[error("cannot parse {value:?} as a number at row {row}, column {column}")]
    ParseCell {
        row: usize,
        column: usize,
        value: String,
    },

    #[error("label column {0:?} not found")]
    LabelColumnNotFound(String),

    #[error("label column index {index} out of range for {columns} columns")]
    LabelColumnOutOfRange { index: usize, columns: usize },

    #[error("observation has {got} variables, model expects {expected}")]
    DimensionMismatch { got: usize, expected: usize },

    #[error("prediction and truth lengths differ ({predicted} vs {truth})")]
    LengthMismatch { predicted: usize, truth: usize },

    #[error("empty sample")]
    EmptySample,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("cross-validation infeasible: {0}")]
    InfeasibleFolds(String),

    #[error("unsupported model file version {0}")]
    UnsupportedVersion(u32),

    #[error("corrupt model file: {0}")]
    CorruptModel(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
