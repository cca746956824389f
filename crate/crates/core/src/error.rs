use std::path::PathBuf;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed header: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },

    #[error("duplicate id `{id}` in {source_name}")]
    DuplicateId { id: String, source_name: &'static str },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("MMSE score {0} outside [0, 30]")]
    MmseOutOfRange(i64),

    #[error("CDR global rating {0} not in {{0, 0.5, 1, 2, 3}}")]
    InvalidCdr(f64),

    #[error("task is untrainable: only {present} class(es) present")]
    TooFewClasses { present: usize },

    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),

    #[error("invalid hyperparameter: {0}")]
    Hyperparameter(String),

    #[error("SVM did not converge after {iterations} iterations (worst KKT violation {worst_violation:e})")]
    SvmNotConverged { iterations: usize, worst_violation: f64 },

    #[error("base learner no better than chance on round 1 (weighted error {error:.4})")]
    WeakLearnerFailed { error: f64 },

    #[error("cosine distance undefined for a zero-norm vector")]
    ZeroNorm,

    #[error("class `{class}` has {count} member(s), fewer than the {folds} folds requested")]
    ClassTooSmallForFolds { class: String, count: usize, folds: usize },

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("ROC requires at least one positive and one negative label")]
    SingleClassLabels,

    #[error("confusion matrix is empty")]
    EmptyConfusion,
}

pub type Result<T> = std::result::Result<T, Error>;
