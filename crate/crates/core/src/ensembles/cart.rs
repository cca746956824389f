//! Weighted-Gini CART classification trees.

use serde::{Deserialize, Serialize};

use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeConfig {
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    /// Minimum number of training rows in each child.
    pub min_leaf: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// Rows with `x[feature] < threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Weighted class distribution, summing to 1.
    Leaf { distribution: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    n_classes: usize,
    depth: usize,
}

fn gini(class_weights: &[f64], total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    1.0 - class_weights.iter().map(|w| (w / total).powi(2)).sum::<f64>()
}

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [usize],
    w: &'a [f64],
    n_classes: usize,
    cfg: TreeConfig,
    nodes: Vec<Node>,
    depth: usize,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl Builder<'_> {
    fn class_weights(&self, rows: &[usize]) -> Vec<f64> {
        let mut cw = vec![0.0; self.n_classes];
        for &i in rows {
            cw[self.y[i]] += self.w[i];
        }
        cw
    }

    fn leaf(&mut self, cw: &[f64]) -> usize {
        let total: f64 = cw.iter().sum();
        let distribution = if total > 0.0 {
            cw.iter().map(|c| c / total).collect()
        } else {
            vec![1.0 / self.n_classes as f64; self.n_classes]
        };
        self.nodes.push(Node::Leaf { distribution });
        self.nodes.len() - 1
    }

    /// Lowest weighted child impurity; ties keep the lower feature index,
    /// then the lower threshold.
    fn best_split(&self, rows: &[usize], total: f64) -> Option<BestSplit> {
        let min_leaf = self.cfg.min_leaf;
        let n = rows.len();
        let mut best: Option<BestSplit> = None;
        let mut sorted = rows.to_vec();
        for feature in 0..self.x.ncols() {
            sorted.sort_by(|&a, &b| {
                self.x
                    .get(a, feature)
                    .total_cmp(&self.x.get(b, feature))
                    .then(a.cmp(&b))
            });
            let mut left = vec![0.0; self.n_classes];
            let mut right = self.class_weights(rows);
            let mut left_w = 0.0;
            for pos in 0..n - 1 {
                let i = sorted[pos];
                left[self.y[i]] += self.w[i];
                right[self.y[i]] -= self.w[i];
                left_w += self.w[i];
                let v = self.x.get(i, feature);
                let next = self.x.get(sorted[pos + 1], feature);
                if next <= v || pos + 1 < min_leaf || n - pos - 1 < min_leaf {
                    continue;
                }
                let right_w = (total - left_w).max(0.0);
                let impurity = (left_w * gini(&left, left_w) + right_w * gini(&right, right_w)) / total;
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    let mut threshold = 0.5 * (v + next);
                    if threshold <= v {
                        threshold = next;
                    }
                    best = Some(BestSplit {
                        feature,
                        threshold,
                        impurity,
                    });
                }
            }
        }
        best
    }

    fn build(&mut self, rows: &[usize], depth: usize) -> usize {
        self.depth = self.depth.max(depth);
        let cw = self.class_weights(rows);
        let total: f64 = cw.iter().sum();
        let pure = cw.iter().filter(|&&c| c > 0.0).count() <= 1;
        let depth_reached = self.cfg.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_reached || rows.len() < 2 * self.cfg.min_leaf || total <= 0.0 {
            return self.leaf(&cw);
        }
        let Some(split) = self.best_split(rows, total) else {
            return self.leaf(&cw);
        };
        let (l, r): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&i| self.x.get(i, split.feature) < split.threshold);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            distribution: Vec::new(),
        });
        let left = self.build(&l, depth + 1);
        let right = self.build(&r, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

/// Grows a tree by greedy weighted-Gini minimization over midpoints of
/// consecutive distinct feature values.
pub fn fit_cart(x: &Matrix, y: &[usize], weights: &[f64], n_classes: usize, cfg: &TreeConfig) -> Result<DecisionTree> {
    if x.nrows() != y.len() || y.len() != weights.len() {
        return Err(Error::InvalidInput(
            "cart: rows, labels and weights differ in length".into(),
        ));
    }
    if y.is_empty() {
        return Err(Error::InvalidInput("cart: empty training set".into()));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidInput(
            "cart: weights must be finite and nonnegative".into(),
        ));
    }
    if weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::InvalidInput("cart: weights sum to zero".into()));
    }
    if cfg.min_leaf == 0 {
        return Err(Error::Hyperparameter("min_leaf must be at least 1".into()));
    }
    if let Some(&bad) = y.iter().find(|&&l| l >= n_classes) {
        return Err(Error::InvalidInput(format!(
            "cart: label {bad} outside {n_classes} classes"
        )));
    }
    let mut b = Builder {
        x,
        y,
        w: weights,
        n_classes,
        cfg: *cfg,
        nodes: Vec::new(),
        depth: 0,
    };
    let rows: Vec<usize> = (0..y.len()).collect();
    let root = b.build(&rows, 0);
    debug_assert_eq!(root, 0);
    Ok(DecisionTree {
        nodes: b.nodes,
        n_classes,
        depth: b.depth,
    })
}

impl DecisionTree {
    pub fn leaf_distribution(&self, x: &[f64]) -> &[f64] {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if x[*feature] < *threshold { *left } else { *right },
                Node::Leaf { distribution } => return distribution,
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        crate::learners::argmax(self.leaf_distribution(x))
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Depth of the deepest leaf (a single leaf has depth 0).
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(values: &[f64]) -> Matrix {
        Matrix::from_rows(&values.iter().map(|v| [*v]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn pure_input_is_single_leaf() {
        let t = fit_cart(&col(&[1.0, 2.0, 3.0]), &[1, 1, 1], &[1.0; 3], 2, &TreeConfig::default()).unwrap();
        assert_eq!(t.nodes().len(), 1);
        assert_eq!(t.predict(&[10.0]), 1);
        assert_eq!(t.leaf_distribution(&[0.0]), &[0.0, 1.0]);
    }

    #[test]
    fn one_split_separates() {
        let x = col(&[0.0, 1.0, 5.0, 6.0]);
        let y = [0, 0, 1, 1];
        let t = fit_cart(&x, &y, &[1.0; 4], 2, &TreeConfig::default()).unwrap();
        match &t.nodes()[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 0);
                assert!(*threshold > 1.0 && *threshold < 5.0);
                assert_eq!(*threshold, 3.0);
            }
            n => panic!("{n:?}"),
        }
        assert_eq!(t.n_leaves(), 2);
        for (row, l) in x.rows_iter().zip(y) {
            assert_eq!(t.predict(row), l);
        }
    }

    #[test]
    fn doubling_weights_keeps_structure() {
        let x = Matrix::from_rows(&[[0.0, 3.0], [1.0, 1.0], [2.0, 0.5], [3.0, 2.0], [4.0, 4.0], [5.0, 0.0]]).unwrap();
        let y = [0, 1, 0, 1, 1, 0];
        let w = [0.1, 0.3, 0.2, 0.15, 0.05, 0.2];
        let w2: Vec<f64> = w.iter().map(|v| v * 2.0).collect();
        let cfg = TreeConfig {
            max_depth: Some(2),
            min_leaf: 1,
        };
        let a = fit_cart(&x, &y, &w, 2, &cfg).unwrap();
        let b = fit_cart(&x, &y, &w2, 2, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn respects_depth_and_min_leaf() {
        let x = col(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        let y = [0, 1, 0, 1, 0, 1, 0, 1];
        let t = fit_cart(
            &x,
            &y,
            &[1.0; 8],
            2,
            &TreeConfig {
                max_depth: Some(2),
                min_leaf: 1,
            },
        )
        .unwrap();
        assert!(t.depth() <= 2);
        let t = fit_cart(
            &x,
            &y,
            &[1.0; 8],
            2,
            &TreeConfig {
                max_depth: None,
                min_leaf: 3,
            },
        )
        .unwrap();
        assert!(t.nodes().len() <= 3);
        let t = fit_cart(&x, &y, &[1.0; 8], 2, &TreeConfig::default()).unwrap();
        for (row, l) in x.rows_iter().zip(y) {
            assert_eq!(t.predict(row), l);
        }
    }

    #[test]
    fn rejects_bad_weights() {
        let x = col(&[0.0, 1.0]);
        assert!(fit_cart(&x, &[0, 1], &[0.0, 0.0], 2, &TreeConfig::default()).is_err());
        assert!(fit_cart(&x, &[0, 1], &[-1.0, 2.0], 2, &TreeConfig::default()).is_err());
    }
}
