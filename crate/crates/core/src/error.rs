use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix contains a non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    /// A block that must have full column rank (after centring) does not.
    #[error("degenerate input in {block}: {detail}")]
    Degenerate { block: String, detail: String },

    #[error("columns are not in the range of the basis (relative residual {residual:.3e})")]
    NotInRange { residual: f64 },

    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error("no informative candidate left after {selected} selections")]
    NoInformativeCandidate { selected: usize },

    #[error("t exceeds feature count ({t} > {n})")]
    TooManyFeatures { t: usize, n: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("missing value at row {row}, column '{column}'")]
    MissingValue { row: usize, column: String },

    #[error("unknown target column '{0}'")]
    UnknownTarget(String),

    #[error("empty data file: {0}")]
    EmptyFile(String),

    #[error("zero-variance column '{0}'")]
    ZeroVariance(String),

    #[error("engines disagree at iteration {iteration}: {detail}")]
    EngineDisagreement { iteration: usize, detail: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn degenerate(block: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Degenerate {
            block: block.into(),
            detail: detail.into(),
        }
    }
}
