use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use octsvm::baselines::best_split;
use octsvm::{brute_force_solve, build_octsvm_model, Dataset, Exec, ModelConfig, TreeTopology};

fn random_data(seed: u64, n: usize, p: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..p).map(|_| rng.gen()).collect())
        .collect();
    let mut labels: Vec<i8> = (0..n)
        .map(|_| if rng.gen::<bool>() { 1 } else { -1 })
        .collect();
    labels[0] = 1;
    labels[1] = -1;
    Dataset::from_normalized(&rows, labels).unwrap()
}

const MODES: [(&str, Exec); 2] = [
    ("sequential", Exec::Sequential),
    ("parallel", Exec::Parallel),
];

fn brute_force(c: &mut Criterion) {
    let data = random_data(3, 6, 2);
    let model = build_octsvm_model(
        &data,
        &TreeTopology::new(0),
        &ModelConfig::with_costs(1.0, 0.1, 0.01, 0),
    )
    .unwrap();
    let mut group = c.benchmark_group("brute_force_n6_d0");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| brute_force_solve(&model, exec).unwrap())
        });
    }
    group.finish();
}

fn cart_scan(c: &mut Criterion) {
    let data = random_data(5, 4000, 32);
    let idx: Vec<usize> = (0..data.len()).collect();
    let mut group = c.benchmark_group("cart_split_scan_4000x32");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| best_split(&data, &idx, 1, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, brute_force, cart_scan);
criterion_main!(benches);
