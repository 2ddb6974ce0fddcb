use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use pwlnet::arrangement::{enumerate_regions, Arrangement};
use pwlnet::randmat::{rank_probability, unit_vector, SphereSampler};
use pwlnet::{Execution, Hyperplane};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn rank_prob(c: &mut Criterion) {
    let mut g = c.benchmark_group("rank_probability");
    g.sample_size(10);
    for (n, m) in [(3, 5), (4, 8)] {
        let sampler = SphereSampler::new(n, 1).unwrap();
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(name, format!("{n}x{m}")), &exec, |b, &exec| {
                b.iter(|| rank_probability(&sampler, m, 20_000, 1e-9, exec).unwrap())
            });
        }
    }
    g.finish();
}

fn random_arrangement(n: usize, m: usize, seed: u64) -> Arrangement {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let planes = (0..m)
        .map(|_| Hyperplane::new(unit_vector(&mut rng, n), rng.random_range(-1.0..1.0)).unwrap())
        .collect();
    Arrangement::new(n, planes).unwrap()
}

fn regions(c: &mut Criterion) {
    let mut g = c.benchmark_group("enumerate_regions");
    g.sample_size(10);
    for (n, m) in [(2, 8), (3, 10)] {
        let arr = random_arrangement(n, m, 5);
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(name, format!("{n}d_{m}")), &exec, |b, &exec| {
                b.iter(|| black_box(enumerate_regions(&arr, 12, exec).unwrap().len()))
            });
        }
    }
    g.finish();
}

criterion_group!(benches, rank_prob, regions);
criterion_main!(benches);
