use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("class '{label}' has {count} samples, need at least {needed}")]
    TooFewSamples {
        label: String,
        count: usize,
        needed: usize,
    },

    #[error("empty test set")]
    EmptyTestSet,

    #[error("invalid test fraction {0} (must be in (0, 1))")]
    InvalidFraction(f64),

    #[error("row '{0}' has no label")]
    MissingLabel(String),

    #[error("non-finite feature value in row '{row}', column '{column}'")]
    NonFinite { row: String, column: String },

    #[error("need at least two classes, found {0}")]
    TooFewClasses(usize),

    #[error("fold {0} contains a single class")]
    DegenerateFold(usize),

    #[error("feature schema mismatch at column {index}: model expects '{expected}', data has '{found}'")]
    SchemaMismatch {
        index: usize,
        expected: String,
        found: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("at least one repeat is required")]
    NoRepeats,

    #[error("unsupported model format version {0}")]
    FormatVersion(u32),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = ClassifierError> = std::result::Result<T, E>;
