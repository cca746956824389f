//! Cross-validation, confusion matrices, per-class metrics and ROC analysis.

mod cv;
mod folds;
mod metrics;
mod roc;

pub use cv::{cross_validate, default_roc_class, derive_seed, evaluate, CvOutcome, Evaluation};
pub use folds::{kfold, FoldPlan};
pub use metrics::{metrics, ClassMetrics, ConfusionMatrix, MetricsReport};
pub use roc::{auc, macro_auc, one_vs_rest, roc, RocCurve, RocPoint};
