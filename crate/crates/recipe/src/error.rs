use thiserror::Error;

#[derive(Debug, Error)]
pub enum RecipeError {
    #[error("line {line}: unknown unit `{unit}`")]
    UnknownUnit { unit: String, line: u64 },
    #[error("line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("dataset has no recipes")]
    EmptyDataset,
    #[error("cannot train a {kind} classifier: only one label (`{label}`) present")]
    DegenerateLabels { kind: String, label: String },
    #[error("ingredient vocabulary mismatch: expected {expected} ingredients, found {found}")]
    VocabularyMismatch { expected: usize, found: usize },
    #[error("unknown label `{label}` (known: {known})")]
    UnknownLabel { label: String, known: String },
    #[error("invalid unit table: {0}")]
    UnitTable(String),
    #[error("invalid model file: {0}")]
    ModelFormat(String),
    #[error(transparent)]
    Core(#[from] compmc::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = RecipeError> = std::result::Result<T, E>;
