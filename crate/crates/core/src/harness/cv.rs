//! Label noise, fold construction and validation splits.

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::OctError;

/// Number of labels flipped for a fraction: `round(fraction · n)`, halves up.
pub fn flip_count(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64) + 0.5).floor() as usize
}

/// Negate exactly `flip_count(n, fraction)` labels chosen uniformly without
/// replacement.
pub fn flip_labels(data: &Dataset, fraction: f64, seed: u64) -> Result<Dataset, OctError> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(OctError::Invalid(format!(
            "flip fraction {fraction} outside [0, 1)"
        )));
    }
    let n = data.len();
    let k = flip_count(n, fraction).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = data.labels.clone();
    for i in index::sample(&mut rng, n, k) {
        labels[i] = -labels[i];
    }
    data.with_labels(labels)
}

/// Seeded random partition of `0..n` into `k` sorted index sets whose sizes
/// differ by at most one; the larger sets come first.
pub fn kfold(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, OctError> {
    if k == 0 || k > n {
        return Err(OctError::Invalid(format!(
            "cannot split {n} observations into {k} folds"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let mut fold = perm[start..start + size].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += size;
    }
    Ok(folds)
}

/// `(train, test)` index pairs for each fold. With `train_on_one_fold` each
/// model is trained on a single fold and tested on the union of the
/// others; otherwise the usual train-on-(k − 1) scheme is used.
pub fn fold_pairs(folds: &[Vec<usize>], train_on_one_fold: bool) -> Vec<(Vec<usize>, Vec<usize>)> {
    (0..folds.len())
        .map(|f| {
            let one = folds[f].clone();
            let mut rest: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|(g, _)| *g != f)
                .flat_map(|(_, v)| v.clone())
                .collect();
            rest.sort_unstable();
            if train_on_one_fold {
                (one, rest)
            } else {
                (rest, one)
            }
        })
        .collect()
}

/// Seeded split of `labels` into a training part with about `train_fraction`
/// of each class and a validation part with the remainder. Each class keeps
/// at least one observation on each side when it has two or more.
pub fn stratified_split(labels: &[i8], train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut valid = Vec::new();
    for class in [-1i8, 1] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let m = idx.len();
        let mut k = (train_fraction * m as f64).round() as usize;
        if m >= 2 {
            k = k.clamp(1, m - 1);
        } else {
            k = m;
        }
        train.extend_from_slice(&idx[..k]);
        valid.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    valid.sort_unstable();
    (train, valid)
}
