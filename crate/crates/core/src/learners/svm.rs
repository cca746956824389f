//! Soft-margin support vector machine trained by sequential minimal
//! optimization.
//!
//! The dual `min ½ αᵀQα − Σα` subject to `0 ≤ α ≤ C`, `Σ αᵢyᵢ = 0` is solved
//! with maximal-violating-pair working-set selection using second-order
//! gain, as in LIBSVM. Multiclass problems use one-vs-one voting.

use serde::{Deserialize, Serialize};

use crate::{Error, Matrix, Result};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    /// `u·v`
    Linear,
    /// `(1 + u·v)²`
    Quadratic,
}

impl Kernel {
    pub fn eval(self, u: &[f64], v: &[f64]) -> f64 {
        let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
        match self {
            Kernel::Linear => dot,
            Kernel::Quadratic => (1.0 + dot).powi(2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    /// Box constraint.
    pub c: f64,
    /// Largest KKT violation accepted at convergence.
    pub tol: f64,
    /// Iteration cap; 0 means `max(1_000_000, 100·n)`.
    pub max_iter: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-6,
            max_iter: 0,
        }
    }
}

/// Two-class SVM; `decision(x) > 0` means the positive class.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySvm {
    kernel: Kernel,
    /// Dual variables for every training row.
    pub alpha: Vec<f64>,
    /// Training targets in {-1, +1}.
    pub targets: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    support: Matrix,
    /// `αᵢ yᵢ` for each support vector.
    coef: Vec<f64>,
}

struct Solver<'a> {
    y: &'a [f64],
    k: Vec<f64>,
    n: usize,
    c: f64,
}

impl Solver<'_> {
    #[inline]
    fn kij(&self, i: usize, j: usize) -> f64 {
        self.k[i * self.n + j]
    }

    fn in_up(&self, a: f64, y: f64) -> bool {
        (y > 0.0 && a < self.c) || (y < 0.0 && a > 0.0)
    }

    fn in_low(&self, a: f64, y: f64) -> bool {
        (y > 0.0 && a > 0.0) || (y < 0.0 && a < self.c)
    }

    /// Gradient of the dual objective, `Qα − 1`, recomputed from scratch.
    fn full_gradient(&self, alpha: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let s: f64 = (0..self.n)
                    .filter(|&j| alpha[j] != 0.0)
                    .map(|j| alpha[j] * self.y[i] * self.y[j] * self.kij(i, j))
                    .sum();
                s - 1.0
            })
            .collect()
    }

    /// `(i, m, M)`: the maximal violator in I_up and the gap bounds.
    fn gap(&self, alpha: &[f64], g: &[f64]) -> (Option<usize>, f64, f64) {
        let mut i = None;
        let mut m = f64::NEG_INFINITY;
        let mut big_m = f64::INFINITY;
        for t in 0..self.n {
            let v = -self.y[t] * g[t];
            if self.in_up(alpha[t], self.y[t]) && v > m {
                m = v;
                i = Some(t);
            }
            if self.in_low(alpha[t], self.y[t]) && v < big_m {
                big_m = v;
            }
        }
        (i, m, big_m)
    }

    fn select_j(&self, alpha: &[f64], g: &[f64], i: usize, m: f64) -> Option<usize> {
        let mut best = None;
        let mut best_obj = f64::INFINITY;
        for t in 0..self.n {
            if !self.in_low(alpha[t], self.y[t]) {
                continue;
            }
            let v = -self.y[t] * g[t];
            let b = m - v;
            if b > 0.0 {
                let mut a = self.kij(i, i) + self.kij(t, t) - 2.0 * self.kij(i, t);
                if a <= 0.0 {
                    a = TAU;
                }
                let obj = -(b * b) / a;
                if obj < best_obj {
                    best_obj = obj;
                    best = Some(t);
                }
            }
        }
        best
    }

    fn update_pair(&self, alpha: &mut [f64], g: &mut [f64], i: usize, j: usize) {
        let (yi, yj) = (self.y[i], self.y[j]);
        let c = self.c;
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let qij = yi * yj * self.kij(i, j);
        if yi != yj {
            let mut quad = self.kij(i, i) + self.kij(j, j) + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-g[i] - g[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = self.kij(i, i) + self.kij(j, j) - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (g[i] - g[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (t, gt) in g.iter_mut().enumerate() {
            let yt = self.y[t];
            *gt += yt * yi * self.kij(t, i) * di + yt * yj * self.kij(t, j) * dj;
        }
    }

    /// Offset `ρ` with `f(x) = Σ αᵢyᵢK(xᵢ, x) − ρ`.
    fn rho(&self, alpha: &[f64], g: &[f64]) -> f64 {
        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut free, mut sum) = (0usize, 0.0);
        for t in 0..self.n {
            let yg = self.y[t] * g[t];
            if alpha[t] >= self.c {
                if self.y[t] < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if alpha[t] <= 0.0 {
                if self.y[t] > 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                free += 1;
                sum += yg;
            }
        }
        if free > 0 {
            sum / free as f64
        } else {
            (ub + lb) / 2.0
        }
    }
}

impl BinarySvm {
    /// Trains on targets in {-1, +1}.
    pub fn fit(x: &Matrix, y: &[f64], kernel: Kernel, cfg: &SvmConfig) -> Result<Self> {
        let n = x.nrows();
        if n != y.len() || n == 0 {
            return Err(Error::InvalidInput(
                "svm: feature/label length mismatch or empty".into(),
            ));
        }
        if y.iter().any(|&t| t != 1.0 && t != -1.0) {
            return Err(Error::InvalidInput("svm: targets must be -1 or +1".into()));
        }
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = kernel.eval(x.row(i), x.row(j));
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        let solver = Solver { y, k, n, c: cfg.c };
        let max_iter = if cfg.max_iter == 0 {
            1_000_000.max(100 * n)
        } else {
            cfg.max_iter
        };

        let mut alpha = vec![0.0; n];
        let mut g = vec![-1.0; n];
        let mut iterations = 0;
        loop {
            let (i, m, big_m) = solver.gap(&alpha, &g);
            let converged = match i {
                None => true,
                Some(_) => m - big_m < cfg.tol,
            };
            if converged {
                // Confirm against a freshly computed gradient before stopping.
                let fresh = solver.full_gradient(&alpha);
                let (_, m2, big_m2) = solver.gap(&alpha, &fresh);
                g = fresh;
                if m2 - big_m2 < cfg.tol || m2 == f64::NEG_INFINITY {
                    break;
                }
                continue;
            }
            if iterations >= max_iter {
                return Err(Error::SvmNotConverged {
                    iterations,
                    worst_violation: m - big_m,
                });
            }
            let i = i.expect("checked above");
            let Some(j) = solver.select_j(&alpha, &g, i, m) else {
                break;
            };
            solver.update_pair(&mut alpha, &mut g, i, j);
            iterations += 1;
        }
        let rho = solver.rho(&alpha, &g);

        let sv: Vec<usize> = (0..n).filter(|&i| alpha[i] > 0.0).collect();
        Ok(Self {
            kernel,
            coef: sv.iter().map(|&i| alpha[i] * y[i]).collect(),
            support: x.select_rows(&sv),
            alpha,
            targets: y.to_vec(),
            bias: -rho,
            iterations,
        })
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support
            .rows_iter()
            .zip(&self.coef)
            .map(|(s, c)| c * self.kernel.eval(s, x))
            .sum::<f64>()
            + self.bias
    }

    /// Largest violation of the KKT conditions over the training rows,
    /// evaluated from the decision function.
    pub fn max_kkt_violation(&self, x: &Matrix, c: f64) -> f64 {
        x.rows_iter()
            .enumerate()
            .map(|(i, row)| {
                let margin = self.targets[i] * self.decision(row) - 1.0;
                let a = self.alpha[i];
                if a <= 0.0 {
                    (-margin).max(0.0)
                } else if a >= c {
                    margin.max(0.0)
                } else {
                    margin.abs()
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Binary SVM or one-vs-one ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    n_classes: usize,
    /// `(negative class, positive class, model)` for each trained pair.
    pairs: Vec<(usize, usize, BinarySvm)>,
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl SvmModel {
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, kernel: Kernel, cfg: &SvmConfig) -> Result<Self> {
        let mut pairs = Vec::new();
        for a in 0..n_classes {
            for b in a + 1..n_classes {
                let rows: Vec<usize> = (0..y.len()).filter(|&i| y[i] == a || y[i] == b).collect();
                let has_a = rows.iter().any(|&i| y[i] == a);
                let has_b = rows.iter().any(|&i| y[i] == b);
                if !(has_a && has_b) {
                    continue;
                }
                let targets: Vec<f64> = rows.iter().map(|&i| if y[i] == b { 1.0 } else { -1.0 }).collect();
                let model = BinarySvm::fit(&x.select_rows(&rows), &targets, kernel, cfg)?;
                pairs.push((a, b, model));
            }
        }
        if pairs.is_empty() {
            return Err(Error::TooFewClasses { present: 1 });
        }
        Ok(Self { n_classes, pairs })
    }

    pub fn pairs(&self) -> &[(usize, usize, BinarySvm)] {
        &self.pairs
    }

    /// Binary: `[1 − σ(f), σ(f)]` of the decision value. Multiclass: vote fractions.
    pub fn scores(&self, row: &[f64]) -> Vec<f64> {
        if self.n_classes == 2 {
            let p = logistic(self.pairs[0].2.decision(row));
            return vec![1.0 - p, p];
        }
        let mut votes = vec![0.0; self.n_classes];
        for (a, b, m) in &self.pairs {
            if m.decision(row) > 0.0 {
                votes[*b] += 1.0;
            } else {
                votes[*a] += 1.0;
            }
        }
        let total = self.pairs.len() as f64;
        votes.into_iter().map(|v| v / total).collect()
    }
}
