use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("treatment column `{column}` has non-binary value {value} at row {row}")]
    NonBinaryTreatment { column: String, row: usize, value: f64 },

    #[error("non-finite value in column `{column}` at row {row}")]
    NonFiniteValue { column: String, row: usize },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("cannot split {n} rows into {k} folds")]
    TooManyFolds { n: usize, k: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("all regression weights are zero")]
    AllZeroWeights,

    #[error("logistic regression separation detected (|coefficient| > {threshold})")]
    SeparationDetected { threshold: f64 },

    #[error("logistic regression outcome is degenerate (all values equal, constant offset)")]
    DegenerateOutcome,

    #[error("no training rows with A = {arm}")]
    EmptyTreatmentArm { arm: u8 },

    #[error("fewer than {required} rows with A = {arm} (found {found})")]
    InsufficientRowsInArm { arm: u8, found: usize, required: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("row mismatch: {0}")]
    RowMismatch(String),

    #[error("unknown data-generating process `{0}`")]
    UnknownDgp(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors raised while checking inputs, before any model is fit.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::AllZeroWeights
                | Error::SeparationDetected { .. }
                | Error::DegenerateOutcome
                | Error::EmptyTreatmentArm { .. }
                | Error::InsufficientRowsInArm { .. }
        )
    }
}
