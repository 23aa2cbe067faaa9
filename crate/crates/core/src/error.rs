use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("feature matrix must have at least one row and one column (got {rows}x{cols})")]
    EmptyMatrix { rows: usize, cols: usize },

    #[error("feature matrix buffer holds {got} values, expected {expected}")]
    BufferSize { expected: usize, got: usize },

    #[error("non-finite feature value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("need ≥ 2 classes, found {0}")]
    TooFewClasses(usize),

    #[error("class ids must be contiguous 0..{classes}, class {missing} has no samples")]
    NonContiguousLabels { classes: usize, missing: usize },

    #[error("class {class} has fewer than 2 samples")]
    ClassTooSmall { class: usize },

    #[error("length mismatch: {what} (expected {expected}, got {got})")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("unknown metric `{name}`, valid metrics: logme, gbc, sfda")]
    UnknownMetric { name: String },

    #[error("unknown dataset `{name}`, valid datasets: {valid}")]
    UnknownDataset { name: String, valid: String },

    #[error("duplicate model id `{0}`")]
    DuplicateModel(String),

    #[error("need at least {needed} entries, got {got}")]
    TooFewEntries { needed: usize, got: usize },

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("missing normalization statistics for norm_source=external")]
    MissingNormStats,

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerical routines themselves, as opposed to
    /// bad inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_))
    }
}
