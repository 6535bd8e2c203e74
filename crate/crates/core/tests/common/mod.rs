#![allow(dead_code)]

use octsvm::harness::RawData;
use octsvm::Dataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform features in `[0, 1]^p` with random labels, redrawn until both
/// classes appear.
pub fn random_instance(seed: u64, n: usize, p: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| rng.gen::<f64>()).collect())
            .collect();
        let labels: Vec<i8> = (0..n)
            .map(|_| if rng.gen::<bool>() { 1 } else { -1 })
            .collect();
        let d = Dataset::from_normalized(&rows, labels).unwrap();
        if d.require_both_classes().is_ok() {
            return d;
        }
    }
}

/// `n` points in the unit square labelled by a random line through the
/// centre, keeping only points at distance at least `margin / 2` from it.
pub fn separable_2d(seed: u64, n: usize, margin: f64) -> RawData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let angle: f64 = rng.gen_range(0.0..std::f64::consts::PI);
    let (a, b) = (angle.cos(), angle.sin());
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    while features.len() < n {
        let x: [f64; 2] = [rng.gen(), rng.gen()];
        let dist = a * (x[0] - 0.5) + b * (x[1] - 0.5);
        if dist.abs() < margin / 2.0 {
            continue;
        }
        features.push(x.to_vec());
        labels.push(if dist > 0.0 { 1 } else { -1 });
    }
    RawData {
        features,
        labels,
        feature_names: vec!["x1".into(), "x2".into()],
    }
}

/// Points in `[0, 1]^p` labelled by a depth-2 arrangement of random
/// hyperplanes.
pub fn tree_labelled(seed: u64, n: usize, p: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let planes: Vec<(Vec<f64>, f64)> = (0..3)
        .map(|_| {
            let w: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b = -w.iter().map(|wj| wj * 0.5).sum::<f64>();
            (w, b)
        })
        .collect();
    let side = |k: usize, x: &[f64]| {
        planes[k].0.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + planes[k].1 >= 0.0
    };
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..p).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let labels = rows
        .iter()
        .map(|x| {
            let leaf = if side(0, x) { side(2, x) } else { !side(1, x) };
            if leaf {
                1
            } else {
                -1
            }
        })
        .collect();
    Dataset::from_normalized(&rows, labels).unwrap()
}
