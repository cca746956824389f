use rayon::prelude::*;

use super::folds::FoldPlan;
use super::metrics::{metrics, ConfusionMatrix, MetricsReport};
use super::roc::{auc, macro_auc, one_vs_rest, RocCurve};
use crate::cohort::LabeledDataset;
use crate::learners::{argmax, ModelSpec, TrainedModel};
use crate::{Error, Result};

/// SplitMix64 step: an independent-looking seed for stream `index` of `base`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Pooled result of one cross-validation run.
#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub confusion: ConfusionMatrix,
    /// Held-out class scores, one row per dataset row.
    pub scores: Vec<Vec<f64>>,
    pub predictions: Vec<usize>,
}

type FoldResult = Vec<(usize, Vec<f64>)>;

fn run_fold(spec: &ModelSpec, data: &LabeledDataset, plan: &FoldPlan, fold: usize) -> Result<FoldResult> {
    let train = plan.train_indices(fold);
    let test = plan.test_indices(fold);
    let fold_spec = ModelSpec {
        seed: derive_seed(spec.seed, fold as u64),
        ..*spec
    };
    let x = data.features.select_rows(&train);
    let y: Vec<usize> = train.iter().map(|&i| data.labels[i]).collect();
    let model = TrainedModel::fit(&fold_spec, &x, &y, &data.class_names)?;
    test.into_iter()
        .map(|i| Ok((i, model.scores(data.features.row(i))?)))
        .collect()
}

/// Trains on k−1 folds and scores the held-out fold, for every fold. Each
/// fold's model seed is derived from `spec.seed` and the fold index, so
/// serial and parallel runs agree bit for bit.
pub fn cross_validate(spec: &ModelSpec, data: &LabeledDataset, plan: &FoldPlan, parallel: bool) -> Result<CvOutcome> {
    if plan.len() != data.len() {
        return Err(Error::InvalidInput(format!(
            "fold plan covers {} rows, dataset has {}",
            plan.len(),
            data.len()
        )));
    }
    let attempt = |fold: usize| {
        run_fold(spec, data, plan, fold).map_err(|e| Error::Fold {
            fold,
            source: Box::new(e),
        })
    };
    let per_fold: Vec<FoldResult> = if parallel {
        (0..plan.k).into_par_iter().map(attempt).collect::<Result<_>>()?
    } else {
        (0..plan.k).map(attempt).collect::<Result<_>>()?
    };

    let mut scores = vec![Vec::new(); data.len()];
    for (i, s) in per_fold.into_iter().flatten() {
        scores[i] = s;
    }
    let predictions: Vec<usize> = scores.iter().map(|s| argmax(s)).collect();
    let mut confusion = ConfusionMatrix::new(&data.class_names);
    for (&truth, &pred) in data.labels.iter().zip(&predictions) {
        confusion.add(truth, pred);
    }
    Ok(CvOutcome {
        confusion,
        scores,
        predictions,
    })
}

/// Cross-validation plus the derived metrics and ROC curves.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub outcome: CvOutcome,
    /// `auc` is that of the `roc_class` curve.
    pub report: MetricsReport,
    /// One-vs-rest curve per class, in class order.
    pub curves: Vec<RocCurve>,
    pub roc_class: usize,
    pub macro_auc: f64,
}

/// Class whose ROC curve is reported by default: AD for the binary task, NC otherwise.
pub fn default_roc_class(n_classes: usize) -> usize {
    if n_classes == 2 {
        1
    } else {
        0
    }
}

pub fn evaluate(
    spec: &ModelSpec,
    data: &LabeledDataset,
    plan: &FoldPlan,
    parallel: bool,
    roc_class: usize,
) -> Result<Evaluation> {
    if roc_class >= data.n_classes() {
        return Err(Error::InvalidInput(format!("ROC class index {roc_class} out of range")));
    }
    let outcome = cross_validate(spec, data, plan, parallel)?;
    let mut report = metrics(&outcome.confusion)?;
    let curves = one_vs_rest(&outcome.scores, &data.labels, data.n_classes())?;
    report.auc = Some(auc(&curves[roc_class]));
    let macro_auc = macro_auc(&curves);
    Ok(Evaluation {
        outcome,
        report,
        curves,
        roc_class,
        macro_auc,
    })
}
