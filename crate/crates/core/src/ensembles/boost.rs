use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{fit_cart, BoostRound, EnsembleConfig, EnsembleMethod, TreeEnsemble, MIN_BOOST_ERROR};
use crate::{Error, Matrix, Result};

/// SAMME AdaBoost over depth-limited CART trees.
///
/// Each round fits a tree to the current weights, computes its weighted
/// error `ε`, sets `α = ln((1−ε)/ε) + ln(K−1)` and multiplies the weights of
/// misclassified rows by `e^α`. Boosting stops early when `ε ≥ 1 − 1/K`
/// (the member is discarded) or when `ε = 0` (the member is kept).
pub fn adaboost_fit(x: &Matrix, y: &[usize], n_classes: usize, cfg: &EnsembleConfig) -> Result<TreeEnsemble> {
    boost(x, y, n_classes, cfg, None)
}

/// RUSBoost: AdaBoost in which every round trains on a random undersample
/// of the data (each class reduced to the minority count, rows drawn with
/// probability proportional to their boosting weight), while the boosting
/// weights are evaluated and updated on the full data.
pub fn rusboost_fit(x: &Matrix, y: &[usize], n_classes: usize, cfg: &EnsembleConfig) -> Result<TreeEnsemble> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    boost(x, y, n_classes, cfg, Some(&mut rng))
}

/// Draws `min class count` rows from every class without replacement, with
/// inclusion driven by `weights` (Efraimidis–Spirakis keys). Returned indices
/// are sorted.
pub fn weighted_undersample<R: Rng>(y: &[usize], weights: &[f64], n_classes: usize, rng: &mut R) -> Result<Vec<usize>> {
    let mut by_class = vec![Vec::new(); n_classes];
    for (i, &l) in y.iter().enumerate() {
        by_class[l].push(i);
    }
    let target = by_class.iter().map(Vec::len).min().unwrap_or(0);
    if target == 0 {
        return Err(Error::InvalidInput(
            "undersampling: a class has no training rows".into(),
        ));
    }
    let mut keep = Vec::with_capacity(target * n_classes);
    for members in &by_class {
        if members.len() == target {
            keep.extend_from_slice(members);
            continue;
        }
        // Key ln(u)/w: the largest keys form a weighted sample without replacement.
        let mut keyed: Vec<(f64, usize)> = members
            .iter()
            .map(|&i| {
                let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
                let key = if weights[i] > 0.0 {
                    u.ln() / weights[i]
                } else {
                    f64::NEG_INFINITY
                };
                (key, i)
            })
            .collect();
        keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        keep.extend(keyed[..target].iter().map(|&(_, i)| i));
    }
    keep.sort_unstable();
    Ok(keep)
}

fn boost(
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    cfg: &EnsembleConfig,
    mut undersample_rng: Option<&mut ChaCha8Rng>,
) -> Result<TreeEnsemble> {
    let n = y.len();
    if n == 0 || x.nrows() != n {
        return Err(Error::InvalidInput("boosting: empty data or length mismatch".into()));
    }
    if n_classes < 2 {
        return Err(Error::TooFewClasses { present: n_classes });
    }
    let present = (0..n_classes).filter(|c| y.contains(c)).count();
    if present < 2 {
        return Err(Error::TooFewClasses { present });
    }
    let method = if undersample_rng.is_some() {
        EnsembleMethod::RusBoost
    } else {
        EnsembleMethod::AdaBoost
    };
    let k = n_classes as f64;
    let chance_error = 1.0 - 1.0 / k;
    let mut weights = vec![1.0 / n as f64; n];
    let mut members = Vec::with_capacity(cfg.rounds);
    let mut rounds = Vec::with_capacity(cfg.rounds);

    for round in 0..cfg.rounds {
        let (tree, subset_counts) = match undersample_rng.as_deref_mut() {
            None => (fit_cart(x, y, &weights, n_classes, &cfg.tree)?, None),
            Some(rng) => {
                let idx = weighted_undersample(y, &weights, n_classes, rng)?;
                let sub_y: Vec<usize> = idx.iter().map(|&i| y[i]).collect();
                let mut counts = vec![0; n_classes];
                for &l in &sub_y {
                    counts[l] += 1;
                }
                let tree = fit_cart(
                    &x.select_rows(&idx),
                    &sub_y,
                    &vec![1.0; idx.len()],
                    n_classes,
                    &cfg.tree,
                )?;
                (tree, Some(counts))
            }
        };
        let missed: Vec<bool> = x.rows_iter().zip(y).map(|(row, &l)| tree.predict(row) != l).collect();
        let total: f64 = weights.iter().sum();
        let raw_error = missed
            .iter()
            .zip(&weights)
            .filter(|(m, _)| **m)
            .map(|(_, w)| w)
            .sum::<f64>()
            / total;
        if raw_error >= chance_error {
            if round == 0 {
                return Err(Error::WeakLearnerFailed { error: raw_error });
            }
            break;
        }
        let error = raw_error.max(MIN_BOOST_ERROR);
        let alpha = ((1.0 - error) / error).ln() + (k - 1.0).ln();
        members.push((tree, alpha));

        let boost_factor = alpha.exp();
        for (w, &m) in weights.iter_mut().zip(&missed) {
            if m {
                *w *= boost_factor;
            }
        }
        let sum: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= sum);
        rounds.push(BoostRound {
            error,
            alpha,
            subset_class_counts: subset_counts,
            weight_sum: weights.iter().sum(),
            weight_min: weights.iter().cloned().fold(f64::INFINITY, f64::min),
        });
        if raw_error == 0.0 {
            break;
        }
    }
    Ok(TreeEnsemble {
        method,
        n_classes,
        members,
        rounds,
    })
}
