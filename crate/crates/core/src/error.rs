use thiserror::Error;

/// Errors produced anywhere in the pipeline. Variants are grouped by the
/// stage that raises them so CLI messages can be stage-tagged.
#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: column `{0}` not found in CSV header")]
    MissingColumn(String),

    #[error("row {line}: {message}")]
    Row { line: usize, message: String },

    #[error("empty event log: {0}")]
    EmptyLog(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("degenerate net: {0}")]
    DegenerateNet(String),

    #[error("degenerate network: {0}")]
    DegenerateNetwork(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("selection error: {0}")]
    Selection(String),

    #[error("fold not applicable: {0}")]
    NotApplicable(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("protection violation: {0}")]
    ProtectionViolation(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
