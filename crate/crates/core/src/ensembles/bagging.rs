use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{fit_cart, EnsembleConfig, EnsembleMethod, TreeConfig, TreeEnsemble};
use crate::{Error, Matrix, Result};

/// `n` row indices drawn uniformly with replacement.
pub fn bootstrap_indices<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Fits one unit-weight tree per bootstrap sample. Samples are given
/// explicitly so callers can reproduce or inspect them.
pub fn bagging_from_samples(
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    tree: &TreeConfig,
    samples: &[Vec<usize>],
) -> Result<TreeEnsemble> {
    if samples.is_empty() {
        return Err(Error::Hyperparameter("bagging needs at least one round".into()));
    }
    if x.nrows() != y.len() || y.is_empty() {
        return Err(Error::InvalidInput("bagging: empty data or length mismatch".into()));
    }
    let members = samples
        .par_iter()
        .map(|idx| {
            let sub_y: Vec<usize> = idx.iter().map(|&i| y[i]).collect();
            let t = fit_cart(&x.select_rows(idx), &sub_y, &vec![1.0; idx.len()], n_classes, tree)?;
            Ok((t, 1.0))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TreeEnsemble {
        method: EnsembleMethod::Bagging,
        n_classes,
        members,
        rounds: Vec::new(),
    })
}

/// Bootstrap aggregation of unpruned CART trees. Each round's sample comes
/// from its own generator, seeded from a stream keyed on `cfg.seed`, so the
/// result does not depend on thread scheduling.
pub fn bagging_fit(x: &Matrix, y: &[usize], n_classes: usize, cfg: &EnsembleConfig) -> Result<TreeEnsemble> {
    let mut seeder = ChaCha8Rng::seed_from_u64(cfg.seed);
    let samples: Vec<Vec<usize>> = (0..cfg.rounds)
        .map(|_| {
            let mut rng = ChaCha8Rng::seed_from_u64(seeder.next_u64());
            bootstrap_indices(y.len(), &mut rng)
        })
        .collect();
    bagging_from_samples(x, y, n_classes, &cfg.tree, &samples)
}
