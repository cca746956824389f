//! Gaussian and kernel-density naive Bayes.

use crate::learners::softmax;
use crate::{Error, Matrix, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Lower bound on any per-feature log-density.
pub const LOG_DENSITY_FLOOR: f64 = -745.0;

/// Minimum kernel bandwidth.
pub const MIN_BANDWIDTH: f64 = 1e-6;

fn class_rows(y: &[usize], n_classes: usize) -> Result<Vec<Vec<usize>>> {
    let mut rows = vec![Vec::new(); n_classes];
    for (i, &l) in y.iter().enumerate() {
        rows.get_mut(l)
            .ok_or_else(|| Error::InvalidInput(format!("label {l} outside {n_classes} classes")))?
            .push(i);
    }
    Ok(rows)
}

fn log_priors(rows: &[Vec<usize>], n: usize) -> Vec<f64> {
    rows.iter()
        .map(|r| {
            if r.is_empty() {
                f64::NEG_INFINITY
            } else {
                (r.len() as f64 / n as f64).ln()
            }
        })
        .collect()
}

fn population_variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n
}

/// Per-class, per-feature normal densities.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianNb {
    log_priors: Vec<f64>,
    means: Vec<Vec<f64>>,
    variances: Vec<Vec<f64>>,
}

impl GaussianNb {
    /// Variances are maximum-likelihood estimates floored at `1e-9` times the
    /// pooled variance of the feature.
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize) -> Result<Self> {
        let rows = class_rows(y, n_classes)?;
        let floors: Vec<f64> = (0..x.ncols())
            .map(|j| {
                let pooled = population_variance(&x.column(j));
                if pooled > 0.0 {
                    1e-9 * pooled
                } else {
                    1e-9
                }
            })
            .collect();
        let mut means = Vec::with_capacity(n_classes);
        let mut variances = Vec::with_capacity(n_classes);
        for members in &rows {
            let mut m = vec![0.0; x.ncols()];
            let mut v = floors.clone();
            if !members.is_empty() {
                for j in 0..x.ncols() {
                    let values: Vec<f64> = members.iter().map(|&i| x.get(i, j)).collect();
                    m[j] = values.iter().sum::<f64>() / values.len() as f64;
                    v[j] = population_variance(&values).max(floors[j]);
                }
            }
            means.push(m);
            variances.push(v);
        }
        Ok(Self {
            log_priors: log_priors(&rows, y.len()),
            means,
            variances,
        })
    }

    pub fn log_posteriors(&self, row: &[f64]) -> Vec<f64> {
        self.log_priors
            .iter()
            .enumerate()
            .map(|(c, &prior)| {
                if !prior.is_finite() {
                    return prior;
                }
                prior
                    + row
                        .iter()
                        .zip(self.means[c].iter().zip(&self.variances[c]))
                        .map(|(x, (m, v))| -0.5 * (LN_2PI + v.ln()) - (x - m).powi(2) / (2.0 * v))
                        .sum::<f64>()
            })
            .collect()
    }

    pub fn scores(&self, row: &[f64]) -> Vec<f64> {
        softmax(&self.log_posteriors(row))
    }
}

/// Quantile by linear interpolation between order statistics of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Silverman's rule of thumb, `0.9 · min(sd, IQR/1.34) · n^(-1/5)`, using
/// the standard deviation alone when the IQR is zero, floored at
/// [`MIN_BANDWIDTH`].
pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return MIN_BANDWIDTH;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    (0.9 * spread * (n as f64).powf(-0.2)).max(MIN_BANDWIDTH)
}

/// Log of a Gaussian kernel density estimate at `x`, evaluated in log space.
pub fn log_kde(points: &[f64], bandwidth: f64, x: f64) -> f64 {
    let exponents: Vec<f64> = points.iter().map(|p| -0.5 * ((x - p) / bandwidth).powi(2)).collect();
    let max = exponents.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = exponents.iter().map(|e| (e - max).exp()).sum();
    let value = max + sum.ln() - (points.len() as f64 * bandwidth).ln() - 0.5 * LN_2PI;
    if value.is_finite() {
        value
    } else {
        LOG_DENSITY_FLOOR
    }
}

/// Per-class, per-feature Gaussian kernel density estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelNb {
    log_priors: Vec<f64>,
    /// `[class][feature]` training values.
    points: Vec<Vec<Vec<f64>>>,
    bandwidths: Vec<Vec<f64>>,
}

impl KernelNb {
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize) -> Result<Self> {
        let rows = class_rows(y, n_classes)?;
        let mut points = Vec::with_capacity(n_classes);
        let mut bandwidths = Vec::with_capacity(n_classes);
        for members in &rows {
            let per_feature: Vec<Vec<f64>> = (0..x.ncols())
                .map(|j| members.iter().map(|&i| x.get(i, j)).collect())
                .collect();
            bandwidths.push(per_feature.iter().map(|v| silverman_bandwidth(v)).collect());
            points.push(per_feature);
        }
        Ok(Self {
            log_priors: log_priors(&rows, y.len()),
            points,
            bandwidths,
        })
    }

    pub fn bandwidths(&self) -> &[Vec<f64>] {
        &self.bandwidths
    }

    pub fn log_posteriors(&self, row: &[f64]) -> Vec<f64> {
        self.log_priors
            .iter()
            .enumerate()
            .map(|(c, &prior)| {
                if !prior.is_finite() {
                    return prior;
                }
                prior
                    + row
                        .iter()
                        .enumerate()
                        .map(|(j, &x)| log_kde(&self.points[c][j], self.bandwidths[c][j], x))
                        .sum::<f64>()
            })
            .collect()
    }

    pub fn scores(&self, row: &[f64]) -> Vec<f64> {
        softmax(&self.log_posteriors(row))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::argmax;

    fn col(values: &[f64]) -> Matrix {
        Matrix::from_rows(&values.iter().map(|v| [*v]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn gaussian_boundary_at_midpoint() {
        let x = col(&[1.0, 2.0, 3.0, 5.0, 6.0, 7.0]);
        let m = GaussianNb::fit(&x, &[0, 0, 0, 1, 1, 1], 2).unwrap();
        assert_eq!(argmax(&m.scores(&[3.9])), 0);
        assert_eq!(argmax(&m.scores(&[4.1])), 1);
        let s = m.scores(&[4.0]);
        assert!((s[0] - s[1]).abs() < 1e-12);
    }

    #[test]
    fn gaussian_single_point_per_class() {
        let x = col(&[0.0, 10.0]);
        let m = GaussianNb::fit(&x, &[0, 1], 2).unwrap();
        assert_eq!(argmax(&m.scores(&[3.0])), 0);
        assert_eq!(argmax(&m.scores(&[6.0])), 1);
        assert!(m.scores(&[6.0]).iter().all(|v| v.is_finite()));
    }

    #[test]
    fn gaussian_duplicate_column_keeps_argmax() {
        let a = [1.0, 2.0, 3.0, 5.0, 6.0, 7.0];
        let y = [0, 0, 0, 1, 1, 1];
        let single = GaussianNb::fit(&col(&a), &y, 2).unwrap();
        let dup = GaussianNb::fit(
            &Matrix::from_rows(&a.iter().map(|v| [*v, *v]).collect::<Vec<_>>()).unwrap(),
            &y,
            2,
        )
        .unwrap();
        for q in [0.0, 2.5, 3.9, 4.1, 5.5, 9.0] {
            let s1 = single.scores(&[q]);
            let s2 = dup.scores(&[q, q]);
            assert_eq!(argmax(&s1), argmax(&s2));
            assert!((s2[argmax(&s2)] >= s1[argmax(&s1)] - 1e-12));
        }
    }

    #[test]
    fn kernel_nearest_point() {
        let x = col(&[0.0, 10.0]);
        let m = KernelNb::fit(&x, &[0, 1], 2).unwrap();
        assert_eq!(argmax(&m.scores(&[1.0])), 0);
        assert_eq!(argmax(&m.scores(&[9.0])), 1);
        assert_eq!(argmax(&m.scores(&[5.1])), 1);
    }

    #[test]
    fn kernel_matches_direct_density_sum() {
        let values = [0.0, 1.0, 2.0, 8.0, 9.0, 10.0];
        let m = KernelNb::fit(&col(&values), &[0, 0, 0, 1, 1, 1], 2).unwrap();
        // Both classes: sd 1, IQR 1 (quartiles 0.5 and 1.5), h = 0.9 · (1/1.34) · 3^(-1/5).
        let h = 0.9 / 1.34 * 3f64.powf(-0.2);
        assert!((m.bandwidths()[0][0] - h).abs() < 1e-12);
        let density = |pts: &[f64], q: f64| -> f64 {
            pts.iter()
                .map(|p| (-(q - p) * (q - p) / (2.0 * h * h)).exp() / (h * (2.0 * std::f64::consts::PI).sqrt()))
                .sum::<f64>()
                / pts.len() as f64
        };
        for q in [5.0, 4.0, 3.0, 7.5] {
            let da = density(&[0.0, 1.0, 2.0], q);
            let db = density(&[8.0, 9.0, 10.0], q);
            let expected = db / (da + db);
            let s = m.scores(&[q]);
            assert!((s[1] - expected).abs() < 1e-9, "q={q}: {} vs {expected}", s[1]);
        }
    }

    #[test]
    fn kernel_far_query_is_finite() {
        let m = KernelNb::fit(&col(&[0.0, 0.1, 5.0, 5.1]), &[0, 0, 1, 1], 2).unwrap();
        let s = m.scores(&[1e6]);
        assert!(s.iter().all(|v| v.is_finite()));
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
