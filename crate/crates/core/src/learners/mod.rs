//! Base classifiers behind a uniform fit / score / predict contract.
//!
//! [`TrainedModel`] is a tagged union over the ten model kinds. Every model
//! scores a raw (unstandardized) feature vector; the standardization fitted
//! on the training split is stored in the model and applied internally.

pub mod knn;
pub mod logistic;
pub mod naive_bayes;
pub mod svm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ensembles::{self, EnsembleConfig, TreeConfig, TreeEnsemble};
use crate::{Error, Matrix, Result};

pub use knn::{KnnMetric, KnnModel};
pub use logistic::{LogisticConfig, LogisticModel};
pub use naive_bayes::{GaussianNb, KernelNb};
pub use svm::{Kernel, SvmConfig, SvmModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    LogisticRegression,
    NbGaussian,
    NbKernel,
    SvmLinear,
    SvmQuadratic,
    KnnCoarse,
    KnnCosine,
    BoostedTree,
    BaggedTree,
    RusBoostedTree,
}

impl ModelKind {
    pub const ALL: [ModelKind; 10] = [
        ModelKind::BoostedTree,
        ModelKind::NbGaussian,
        ModelKind::NbKernel,
        ModelKind::SvmLinear,
        ModelKind::SvmQuadratic,
        ModelKind::KnnCoarse,
        ModelKind::KnnCosine,
        ModelKind::LogisticRegression,
        ModelKind::BaggedTree,
        ModelKind::RusBoostedTree,
    ];

    /// CLI token.
    pub fn token(self) -> &'static str {
        match self {
            ModelKind::LogisticRegression => "logistic",
            ModelKind::NbGaussian => "nb-gauss",
            ModelKind::NbKernel => "nb-kernel",
            ModelKind::SvmLinear => "svm-linear",
            ModelKind::SvmQuadratic => "svm-quadratic",
            ModelKind::KnnCoarse => "knn-coarse",
            ModelKind::KnnCosine => "knn-cosine",
            ModelKind::BoostedTree => "boosted",
            ModelKind::BaggedTree => "bagged",
            ModelKind::RusBoostedTree => "rusboost",
        }
    }

    /// Human-readable name used in comparison tables.
    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::LogisticRegression => "Logistic Regression",
            ModelKind::NbGaussian => "Naive Bayes (Gaussian)",
            ModelKind::NbKernel => "Naive Bayes (Kernel)",
            ModelKind::SvmLinear => "SVM (Linear)",
            ModelKind::SvmQuadratic => "SVM (Quadratic)",
            ModelKind::KnnCoarse => "KNN (Coarse)",
            ModelKind::KnnCosine => "KNN (Cosine)",
            ModelKind::BoostedTree => "Ensemble (Boosted Tree)",
            ModelKind::BaggedTree => "Ensemble (Bagged Tree)",
            ModelKind::RusBoostedTree => "Ensemble (RUS Boosted Tree)",
        }
    }

    pub fn is_tree_ensemble(self) -> bool {
        matches!(
            self,
            ModelKind::BoostedTree | ModelKind::BaggedTree | ModelKind::RusBoostedTree
        )
    }

    /// Whether inputs are z-scored before fitting.
    pub fn standardizes(self) -> bool {
        !matches!(
            self,
            ModelKind::KnnCosine | ModelKind::BoostedTree | ModelKind::BaggedTree | ModelKind::RusBoostedTree
        )
    }

    pub fn default_hyperparameters(self) -> Hyperparameters {
        match self {
            ModelKind::LogisticRegression => Hyperparameters::Logistic(LogisticConfig::default()),
            ModelKind::NbGaussian => Hyperparameters::GaussianNb,
            ModelKind::NbKernel => Hyperparameters::KernelNb,
            ModelKind::SvmLinear | ModelKind::SvmQuadratic => Hyperparameters::Svm(SvmConfig::default()),
            ModelKind::KnnCoarse => Hyperparameters::Knn { k: 100 },
            ModelKind::KnnCosine => Hyperparameters::Knn { k: 10 },
            ModelKind::BoostedTree | ModelKind::RusBoostedTree => Hyperparameters::Trees {
                rounds: 30,
                tree: TreeConfig {
                    max_depth: Some(3),
                    min_leaf: 1,
                },
            },
            ModelKind::BaggedTree => Hyperparameters::Trees {
                rounds: 30,
                tree: TreeConfig {
                    max_depth: None,
                    min_leaf: 1,
                },
            },
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.token() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown model token `{s}`")))
    }
}

/// Per-kind hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Hyperparameters {
    Logistic(LogisticConfig),
    GaussianNb,
    KernelNb,
    Svm(SvmConfig),
    Knn { k: usize },
    Trees { rounds: usize, tree: TreeConfig },
}

/// Optional overrides of the per-kind defaults. Fields that do not apply to
/// a kind are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Overrides {
    pub k: Option<usize>,
    pub c: Option<f64>,
    pub lambda: Option<f64>,
    pub rounds: Option<usize>,
    pub max_depth: Option<usize>,
    pub min_leaf: Option<usize>,
}

/// What to train: model kind, its hyperparameters and the RNG seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub params: Hyperparameters,
    pub seed: u64,
}

impl ModelSpec {
    /// Spec with the kind's default hyperparameters.
    pub fn new(kind: ModelKind, seed: u64) -> Self {
        Self {
            kind,
            params: kind.default_hyperparameters(),
            seed,
        }
    }

    /// Defaults with `overrides` applied, validated.
    pub fn with_overrides(kind: ModelKind, seed: u64, overrides: &Overrides) -> Result<Self> {
        let mut spec = Self::new(kind, seed);
        match &mut spec.params {
            Hyperparameters::Logistic(cfg) => {
                if let Some(l) = overrides.lambda {
                    cfg.lambda = l;
                }
            }
            Hyperparameters::Svm(cfg) => {
                if let Some(c) = overrides.c {
                    cfg.c = c;
                }
            }
            Hyperparameters::Knn { k } => {
                if let Some(v) = overrides.k {
                    *k = v;
                }
            }
            Hyperparameters::Trees { rounds, tree } => {
                if let Some(r) = overrides.rounds {
                    *rounds = r;
                }
                if let Some(d) = overrides.max_depth {
                    tree.max_depth = Some(d);
                }
                if let Some(m) = overrides.min_leaf {
                    tree.min_leaf = m;
                }
            }
            Hyperparameters::GaussianNb | Hyperparameters::KernelNb => {}
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Hyperparameter(msg));
        let family_ok = matches!(
            (self.kind, &self.params),
            (ModelKind::LogisticRegression, Hyperparameters::Logistic(_))
                | (ModelKind::NbGaussian, Hyperparameters::GaussianNb)
                | (ModelKind::NbKernel, Hyperparameters::KernelNb)
                | (ModelKind::SvmLinear | ModelKind::SvmQuadratic, Hyperparameters::Svm(_))
                | (ModelKind::KnnCoarse | ModelKind::KnnCosine, Hyperparameters::Knn { .. })
                | (
                    ModelKind::BoostedTree | ModelKind::BaggedTree | ModelKind::RusBoostedTree,
                    Hyperparameters::Trees { .. }
                )
        );
        if !family_ok {
            return bad(format!(
                "hyperparameters {:?} do not fit model {}",
                self.params, self.kind
            ));
        }
        match self.params {
            Hyperparameters::Logistic(cfg) => {
                if !(cfg.lambda > 0.0 && cfg.lambda.is_finite()) {
                    return bad(format!("lambda must be positive, got {}", cfg.lambda));
                }
                if cfg.max_iter == 0 {
                    return bad("max_iter must be positive".into());
                }
            }
            Hyperparameters::Svm(cfg) => {
                if !(cfg.c > 0.0 && cfg.c.is_finite()) {
                    return bad(format!("C must be positive, got {}", cfg.c));
                }
                if cfg.tol.is_nan() || cfg.tol <= 0.0 {
                    return bad("SVM tolerance must be positive".into());
                }
            }
            Hyperparameters::Knn { k: 0 } => return bad("k must be at least 1".into()),
            Hyperparameters::Trees { rounds, tree } => {
                if rounds == 0 {
                    return bad("rounds must be at least 1".into());
                }
                if tree.min_leaf == 0 {
                    return bad("min_leaf must be at least 1".into());
                }
                if tree.max_depth == Some(0) {
                    return bad("max_depth must be at least 1".into());
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Per-feature z-score parameters estimated on a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Sample standard deviation; 1 for constant columns.
    pub sd: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Matrix) -> Self {
        let n = x.nrows();
        let (mut mean, mut sd) = (Vec::new(), Vec::new());
        for j in 0..x.ncols() {
            let col = x.column(j);
            let m = if n == 0 {
                0.0
            } else {
                col.iter().sum::<f64>() / n as f64
            };
            let s = if n < 2 {
                0.0
            } else {
                (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            };
            mean.push(m);
            sd.push(if s > 0.0 && s.is_finite() { s } else { 1.0 });
        }
        Self { mean, sd }
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.sd))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn transform(&self, x: &Matrix) -> Matrix {
        x.map_rows(|r| self.transform_row(r))
    }
}

/// Fitted state of one of the model kinds.
#[derive(Debug, Clone)]
pub enum FittedState {
    Logistic(LogisticModel),
    GaussianNb(GaussianNb),
    KernelNb(KernelNb),
    Svm(SvmModel),
    Knn(KnnModel),
    Ensemble(TreeEnsemble),
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub class_names: Vec<String>,
    pub standardizer: Option<Standardizer>,
    pub state: FittedState,
}

/// Index of the largest score; ties go to the lowest index.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Normalizes log-scores into probabilities. `-inf` entries get zero mass.
pub(crate) fn softmax(log_scores: &[f64]) -> Vec<f64> {
    let max = log_scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return vec![1.0 / log_scores.len() as f64; log_scores.len()];
    }
    let exps: Vec<f64> = log_scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

impl TrainedModel {
    /// Fits `spec` on `x` (raw features) and labels indexing `class_names`.
    pub fn fit(spec: &ModelSpec, x: &Matrix, y: &[usize], class_names: &[String]) -> Result<Self> {
        spec.validate()?;
        let n_classes = class_names.len();
        if x.nrows() != y.len() {
            return Err(Error::InvalidInput(format!(
                "{} feature rows but {} labels",
                x.nrows(),
                y.len()
            )));
        }
        if x.nrows() == 0 {
            return Err(Error::InvalidInput("empty training set".into()));
        }
        if let Some(&bad) = y.iter().find(|&&l| l >= n_classes) {
            return Err(Error::InvalidInput(format!("label {bad} outside {n_classes} classes")));
        }
        let standardizer = spec.kind.standardizes().then(|| Standardizer::fit(x));
        let xs = match &standardizer {
            Some(s) => s.transform(x),
            None => x.clone(),
        };
        let state = match (spec.kind, spec.params) {
            (ModelKind::LogisticRegression, Hyperparameters::Logistic(cfg)) => {
                FittedState::Logistic(LogisticModel::fit(&xs, y, n_classes, &cfg)?)
            }
            (ModelKind::NbGaussian, _) => FittedState::GaussianNb(GaussianNb::fit(&xs, y, n_classes)?),
            (ModelKind::NbKernel, _) => FittedState::KernelNb(KernelNb::fit(&xs, y, n_classes)?),
            (ModelKind::SvmLinear, Hyperparameters::Svm(cfg)) => {
                FittedState::Svm(SvmModel::fit(&xs, y, n_classes, Kernel::Linear, &cfg)?)
            }
            (ModelKind::SvmQuadratic, Hyperparameters::Svm(cfg)) => {
                FittedState::Svm(SvmModel::fit(&xs, y, n_classes, Kernel::Quadratic, &cfg)?)
            }
            (ModelKind::KnnCoarse, Hyperparameters::Knn { k }) => {
                FittedState::Knn(KnnModel::fit(&xs, y, n_classes, k, KnnMetric::Euclidean)?)
            }
            (ModelKind::KnnCosine, Hyperparameters::Knn { k }) => {
                FittedState::Knn(KnnModel::fit(&xs, y, n_classes, k, KnnMetric::Cosine)?)
            }
            (kind, Hyperparameters::Trees { rounds, tree }) => {
                let cfg = EnsembleConfig {
                    rounds,
                    tree,
                    seed: spec.seed,
                };
                let ens = match kind {
                    ModelKind::BoostedTree => ensembles::adaboost_fit(&xs, y, n_classes, &cfg)?,
                    ModelKind::BaggedTree => ensembles::bagging_fit(&xs, y, n_classes, &cfg)?,
                    _ => ensembles::rusboost_fit(&xs, y, n_classes, &cfg)?,
                };
                FittedState::Ensemble(ens)
            }
            _ => unreachable!("validated spec"),
        };
        Ok(Self {
            spec: *spec,
            class_names: class_names.to_vec(),
            standardizer,
            state,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Class scores for a raw feature vector; length equals the class count.
    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        let transformed;
        let x = match &self.standardizer {
            Some(s) => {
                transformed = s.transform_row(x);
                &transformed[..]
            }
            None => x,
        };
        Ok(match &self.state {
            FittedState::Logistic(m) => m.scores(x),
            FittedState::GaussianNb(m) => m.scores(x),
            FittedState::KernelNb(m) => m.scores(x),
            FittedState::Svm(m) => m.scores(x),
            FittedState::Knn(m) => m.scores(x)?,
            FittedState::Ensemble(e) => e.scores(x),
        })
    }

    /// `argmax` of [`scores`](Self::scores).
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.scores(x)?))
    }
}
