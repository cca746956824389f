//! CART trees and the tree ensembles: AdaBoost (SAMME), bagging and RUSBoost.

mod bagging;
mod boost;
pub mod cart;

use serde::{Deserialize, Serialize};

pub use bagging::{bagging_fit, bagging_from_samples, bootstrap_indices};
pub use boost::{adaboost_fit, rusboost_fit, weighted_undersample};
pub use cart::{fit_cart, DecisionTree, Node, TreeConfig};

use crate::learners::softmax;

/// Cap on a boosting member's weighted error: an error of zero is treated as
/// this value, which bounds α at `ln(1e10) + ln(K−1)`.
pub const MIN_BOOST_ERROR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub rounds: usize,
    pub tree: TreeConfig,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnsembleMethod {
    AdaBoost,
    Bagging,
    RusBoost,
}

/// Diagnostics recorded for one boosting round.
#[derive(Debug, Clone, PartialEq)]
pub struct BoostRound {
    /// Weighted training error on the full data, clamped below at [`MIN_BOOST_ERROR`].
    pub error: f64,
    pub alpha: f64,
    /// Per-class row counts of the round's training subset (RUSBoost only).
    pub subset_class_counts: Option<Vec<usize>>,
    /// Sum and minimum of the boosting weights after this round's update.
    pub weight_sum: f64,
    pub weight_min: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeEnsemble {
    pub method: EnsembleMethod,
    pub n_classes: usize,
    /// `(tree, weight)`; bagging weights are all 1.
    pub members: Vec<(DecisionTree, f64)>,
    /// Empty for bagging.
    pub rounds: Vec<BoostRound>,
}

impl TreeEnsemble {
    /// Boosting: softmax of α-weighted votes. Bagging: mean leaf distribution.
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        match self.method {
            EnsembleMethod::Bagging => {
                let mut acc = vec![0.0; self.n_classes];
                for (tree, _) in &self.members {
                    for (a, p) in acc.iter_mut().zip(tree.leaf_distribution(x)) {
                        *a += p;
                    }
                }
                let m = self.members.len() as f64;
                acc.into_iter().map(|a| a / m).collect()
            }
            EnsembleMethod::AdaBoost | EnsembleMethod::RusBoost => {
                if self.members.len() == 1 {
                    return self.members[0].0.leaf_distribution(x).to_vec();
                }
                softmax(&self.votes(x))
            }
        }
    }

    /// α-weighted class votes.
    pub fn votes(&self, x: &[f64]) -> Vec<f64> {
        let mut votes = vec![0.0; self.n_classes];
        for (tree, alpha) in &self.members {
            votes[tree.predict(x)] += alpha;
        }
        votes
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        crate::learners::argmax(&self.scores(x))
    }
}
