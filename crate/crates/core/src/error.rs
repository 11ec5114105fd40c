use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("variable index {index} out of range ({count} variables)")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("empty input")]
    EmptyInput,

    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("variable `{0}` has no recorded data")]
    NoRecordedData(String),

    #[error("target and selected variable are the same (`{0}`)")]
    SelfConditioning(String),

    #[error("invalid injection plan: {0}")]
    InvalidPlan(String),

    #[error("scene precondition violated: {0}")]
    Scene(String),

    #[error("invalid render style: {0}")]
    Style(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
