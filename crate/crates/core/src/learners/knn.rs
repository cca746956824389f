//! k-nearest-neighbour voting with Euclidean ("coarse") or cosine distance.

use serde::{Deserialize, Serialize};

use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KnnMetric {
    Euclidean,
    Cosine,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    train: Matrix,
    labels: Vec<usize>,
    norms: Vec<f64>,
    n_classes: usize,
    k: usize,
    metric: KnnMetric,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

impl KnnModel {
    /// Stores the training rows. `k` is capped at the training size.
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, k: usize, metric: KnnMetric) -> Result<Self> {
        if k == 0 {
            return Err(Error::Hyperparameter("k must be at least 1".into()));
        }
        let norms: Vec<f64> = x.rows_iter().map(norm).collect();
        if metric == KnnMetric::Cosine && norms.contains(&0.0) {
            return Err(Error::ZeroNorm);
        }
        Ok(Self {
            train: x.clone(),
            labels: y.to_vec(),
            norms,
            n_classes,
            k: k.min(x.nrows()),
            metric,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    fn distances(&self, query: &[f64]) -> Result<Vec<f64>> {
        match self.metric {
            KnnMetric::Euclidean => Ok(self
                .train
                .rows_iter()
                .map(|r| r.iter().zip(query).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
                .collect()),
            KnnMetric::Cosine => {
                let qn = norm(query);
                if qn == 0.0 {
                    return Err(Error::ZeroNorm);
                }
                Ok(self
                    .train
                    .rows_iter()
                    .zip(&self.norms)
                    .map(|(r, rn)| 1.0 - r.iter().zip(query).map(|(a, b)| a * b).sum::<f64>() / (rn * qn))
                    .collect())
            }
        }
    }

    /// Vote fractions among the `k` nearest rows; distance ties go to the
    /// lower training index.
    pub fn scores(&self, query: &[f64]) -> Result<Vec<f64>> {
        let d = self.distances(query)?;
        let mut order: Vec<usize> = (0..d.len()).collect();
        order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
        let mut votes = vec![0.0; self.n_classes];
        for &i in &order[..self.k] {
            votes[self.labels[i]] += 1.0;
        }
        Ok(votes.into_iter().map(|v| v / self.k as f64).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k1_exact_match() {
        let x = Matrix::from_rows(&[[0.0, 1.0], [3.0, 4.0], [5.0, 5.0]]).unwrap();
        let m = KnnModel::fit(&x, &[0, 1, 0], 2, 1, KnnMetric::Euclidean).unwrap();
        assert_eq!(m.scores(&[3.0, 4.0]).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn k3_vote_fraction() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [5.0]]).unwrap();
        let m = KnnModel::fit(&x, &[0, 0, 1], 2, 3, KnnMetric::Euclidean).unwrap();
        let s = m.scores(&[0.4]).unwrap();
        assert!((s[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((s[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn k_is_capped() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let m = KnnModel::fit(&x, &[0, 1], 2, 100, KnnMetric::Euclidean).unwrap();
        assert_eq!(m.k(), 2);
        assert_eq!(m.scores(&[0.0]).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn cosine_scale_invariance() {
        let x = Matrix::from_rows(&[[1.0, 0.1], [1.0, 0.3], [0.2, 1.0], [0.1, 1.0], [0.5, 0.5]]).unwrap();
        let m = KnnModel::fit(&x, &[0, 0, 1, 1, 1], 2, 3, KnnMetric::Cosine).unwrap();
        let q = [0.8, 0.35];
        let scaled = [8.0, 3.5];
        assert_eq!(m.scores(&q).unwrap(), m.scores(&scaled).unwrap());
        assert!(matches!(m.scores(&[0.0, 0.0]), Err(Error::ZeroNorm)));
    }

    #[test]
    fn distance_ties_prefer_lower_index() {
        let x = Matrix::from_rows(&[[1.0], [-1.0]]).unwrap();
        let m = KnnModel::fit(&x, &[1, 0], 2, 1, KnnMetric::Euclidean).unwrap();
        assert_eq!(m.scores(&[0.0]).unwrap(), vec![0.0, 1.0]);
    }
}
