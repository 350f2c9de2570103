use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("ingest error at row {row}, byte {byte}: {message}")]
    Ingest { row: u64, byte: u64, message: String },

    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("pattern syntax error at offset {offset}: {message}")]
    PatternSyntax { offset: usize, message: String },

    #[error("formula error: {0}")]
    Formula(String),

    #[error("edit program cannot be applied: {0}")]
    Apply(String),

    #[error("oracle error: {0}")]
    Oracle(String),

    #[error("{0}")]
    Corpus(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
