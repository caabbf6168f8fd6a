use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("structural error: {0}")]
    Structure(String),

    #[error("duplicate timestamp {label} at row {row}")]
    Duplicate { label: String, row: usize },

    #[error("incomplete coverage for quarter(s): {}", .0.join(", "))]
    Coverage(Vec<String>),

    #[error("degenerate scale for {0}")]
    DegenerateScale(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("sample size too small: {0}")]
    SampleSize(String),

    #[error("singular design matrix: {0}")]
    Singular(String),

    #[error("degenerate test: {0}")]
    DegenerateTest(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("token {0} is a special token and has no value")]
    SpecialToken(u32),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("graph is not finalized: {0}")]
    NotFinalized(String),

    #[error("insufficient history: {0}")]
    InsufficientHistory(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerical kind (factorizations, singular systems).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_) | Error::Singular(_) | Error::DegenerateTest(_))
    }
}
