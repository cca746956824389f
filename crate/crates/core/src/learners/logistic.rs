//! L2-penalized logistic regression fit by iteratively reweighted least
//! squares (Newton's method with step halving).
//!
//! The minimized objective is the mean negative log-likelihood plus
//! `λ/2 · ‖w‖²`, with the intercept penalized as well so that separable or
//! single-class training data still yields finite weights.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    pub lambda: f64,
    pub max_iter: usize,
    /// Convergence threshold on the largest absolute weight change.
    pub tol: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-4,
            max_iter: 100,
            tol: 1e-8,
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// `w[0]` is the intercept.
fn linear(w: &[f64], row: &[f64]) -> f64 {
    w[0] + w[1..].iter().zip(row).map(|(a, b)| a * b).sum::<f64>()
}

/// Penalized mean negative log-likelihood. `y` holds 0/1 targets.
pub fn objective(w: &[f64], x: &Matrix, y: &[f64], lambda: f64) -> f64 {
    let n = x.nrows() as f64;
    let nll: f64 = x
        .rows_iter()
        .zip(y)
        .map(|(row, &t)| {
            let z = linear(w, row);
            softplus(z) - t * z
        })
        .sum();
    nll / n + 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>()
}

/// Gradient of [`objective`].
pub fn gradient(w: &[f64], x: &Matrix, y: &[f64], lambda: f64) -> Vec<f64> {
    let n = x.nrows() as f64;
    let mut g = vec![0.0; w.len()];
    for (row, &t) in x.rows_iter().zip(y) {
        let r = sigmoid(linear(w, row)) - t;
        g[0] += r;
        for (gj, xj) in g[1..].iter_mut().zip(row) {
            *gj += r * xj;
        }
    }
    g.iter_mut().zip(w).for_each(|(gj, wj)| *gj = *gj / n + lambda * wj);
    g
}

fn hessian(w: &[f64], x: &Matrix, lambda: f64) -> DMatrix<f64> {
    let p = w.len();
    let n = x.nrows() as f64;
    let mut h = DMatrix::<f64>::zeros(p, p);
    let mut aug = vec![1.0; p];
    for row in x.rows_iter() {
        aug[1..].copy_from_slice(row);
        let s = sigmoid(linear(w, row));
        let weight = s * (1.0 - s);
        for a in 0..p {
            for b in a..p {
                h[(a, b)] += weight * aug[a] * aug[b];
            }
        }
    }
    for a in 0..p {
        for b in a..p {
            let v = h[(a, b)] / n + if a == b { lambda } else { 0.0 };
            h[(a, b)] = v;
            h[(b, a)] = v;
        }
    }
    h
}

/// Solves `h · d = g`, adding a growing ridge if `h` is not numerically positive definite.
fn ridge_solve(mut h: DMatrix<f64>, g: &[f64]) -> Result<Vec<f64>> {
    let rhs = DVector::from_column_slice(g);
    let scale = h.diagonal().abs().max().max(1.0);
    let mut ridge = 0.0;
    for _ in 0..20 {
        if let Some(ch) = h.clone().cholesky() {
            return Ok(ch.solve(&rhs).iter().copied().collect());
        }
        let next = if ridge == 0.0 { 1e-12 * scale } else { ridge * 10.0 };
        for i in 0..h.nrows() {
            h[(i, i)] += next - ridge;
        }
        ridge = next;
    }
    Err(Error::InvalidInput(
        "logistic regression: normal equations are singular".into(),
    ))
}

/// Two-class logistic model for a single positive class.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryLogistic {
    /// Intercept first, then one weight per feature (standardized space).
    pub weights: Vec<f64>,
    /// Objective value at the start and after every accepted step.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl BinaryLogistic {
    /// Fits on 0/1 targets.
    pub fn fit(x: &Matrix, y: &[f64], cfg: &LogisticConfig) -> Result<Self> {
        let p = x.ncols() + 1;
        let mut w = vec![0.0; p];
        let mut current = objective(&w, x, y, cfg.lambda);
        let mut trace = vec![current];
        let mut converged = false;
        let mut iterations = 0;
        while iterations < cfg.max_iter {
            iterations += 1;
            let g = gradient(&w, x, y, cfg.lambda);
            let step = ridge_solve(hessian(&w, x, cfg.lambda), &g)?;
            let mut scale = 1.0;
            let mut accepted = None;
            for _ in 0..40 {
                let candidate: Vec<f64> = w.iter().zip(&step).map(|(a, d)| a - scale * d).collect();
                let value = objective(&candidate, x, y, cfg.lambda);
                if value <= current {
                    accepted = Some((candidate, value));
                    break;
                }
                scale *= 0.5;
            }
            let Some((next, value)) = accepted else {
                // No descent possible at machine precision: at the optimum.
                converged = true;
                break;
            };
            let delta = next.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            w = next;
            current = value;
            trace.push(current);
            if delta < cfg.tol {
                converged = true;
                break;
            }
        }
        Ok(Self {
            weights: w,
            objective_trace: trace,
            iterations,
            converged,
        })
    }

    /// Probability of the positive class.
    pub fn probability(&self, row: &[f64]) -> f64 {
        sigmoid(linear(&self.weights, row))
    }
}

/// Binary model, or one-vs-rest for more than two classes.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    n_classes: usize,
    /// Binary: one model for class 1. Multiclass: one model per class.
    models: Vec<BinaryLogistic>,
}

impl LogisticModel {
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, cfg: &LogisticConfig) -> Result<Self> {
        let targets = |class: usize| -> Vec<f64> { y.iter().map(|&l| f64::from(u8::from(l == class))).collect() };
        let models = if n_classes == 2 {
            vec![BinaryLogistic::fit(x, &targets(1), cfg)?]
        } else {
            (0..n_classes)
                .map(|c| BinaryLogistic::fit(x, &targets(c), cfg))
                .collect::<Result<_>>()?
        };
        Ok(Self { n_classes, models })
    }

    pub fn binary_models(&self) -> &[BinaryLogistic] {
        &self.models
    }

    pub fn scores(&self, row: &[f64]) -> Vec<f64> {
        if self.n_classes == 2 {
            let p = self.models[0].probability(row);
            return vec![1.0 - p, p];
        }
        let probs: Vec<f64> = self.models.iter().map(|m| m.probability(row)).collect();
        let total: f64 = probs.iter().sum();
        if total > 0.0 {
            probs.into_iter().map(|p| p / total).collect()
        } else {
            vec![1.0 / self.n_classes as f64; self.n_classes]
        }
    }
}
