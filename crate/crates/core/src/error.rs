//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by ingestion, feature engineering, and estimation.
#[derive(Debug, Error)]
pub enum Error {
    /// A mandatory column is absent from the input schema.
    #[error("missing mandatory column `{0}`")]
    MissingColumn(String),

    /// A data row failed validation and was rejected.
    #[error("row {line}: {reason}")]
    Row { line: usize, reason: String },

    /// Invalid configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A named column does not exist.
    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    /// A column name collides with an existing one.
    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),

    /// A value outside the operation's domain (e.g. sqrt of a negative).
    #[error("invalid value in column `{column}` at row {row}: {reason}")]
    InvalidValue {
        column: String,
        row: usize,
        reason: String,
    },

    /// The design matrix is rank-deficient.
    #[error("design matrix is rank-deficient; dependent columns: {columns:?}")]
    RankDeficient { columns: Vec<String> },

    /// Too few observations for the number of parameters.
    #[error("too few observations: n = {n}, parameters = {k}")]
    TooFewObservations { n: usize, k: usize },

    /// Iterative fit did not converge; carries the objective trace.
    #[error("{what} did not converge after {} iterations", trace.len())]
    NonConvergence { what: String, trace: Vec<f64> },

    /// Fitted means diverged (quasi-complete separation).
    #[error("separation detected: fitted means diverge")]
    Separation,

    /// Every requested predictor was absorbed by fixed effects.
    #[error("nothing to estimate: all predictors absorbed ({0})")]
    NothingToEstimate(String),

    /// Input too short or otherwise degenerate for the estimator.
    #[error("{0}")]
    Insufficient(String),

    /// Model fit failed inside the walk-forward loop.
    #[error("fold {fold_date}: {source}")]
    FoldFailure {
        fold_date: chrono::NaiveDate,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
