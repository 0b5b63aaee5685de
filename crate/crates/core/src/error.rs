use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = AtolError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum AtolError {
    #[error("empty collection")]
    EmptyCollection,

    #[error("budget exceeds support: budget {budget} but only {distinct} distinct positive-mass points")]
    BudgetExceedsSupport { budget: usize, distinct: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("adaptive bandwidth undefined for b=1")]
    BandwidthUndefined,

    #[error("duplicate centers at indices {first} and {second}")]
    DuplicateCenters { first: usize, second: usize },

    #[error("channel count mismatch: map has {expected} channels, got {found}")]
    ChannelMismatch { expected: usize, found: usize },

    #[error("degenerate labels: at least two classes are required")]
    DegenerateLabels,

    #[error("NaN feature at row {row}, column {col}")]
    NanFeature { row: usize, col: usize },

    #[error("empty evaluation set")]
    EmptyEvaluation,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<AtolError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl AtolError {
    pub fn context(self, context: impl Into<String>) -> Self {
        AtolError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
