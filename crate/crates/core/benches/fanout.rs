//! Seed fan-out through the rayon pool versus a plain sequential loop.
//!
//! Build with `--no-default-features` to see `par::map` itself fall back to
//! the sequential path.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use o2o_lab::bandit::{collect_offline_uniform, run_bandit_experiment, sample_bandit, AgentSpec};
use o2o_lab::par;
use o2o_lab::rng::{stream_rng, Stream};

fn bandit_run(seed: &u64) -> f64 {
    let bandit = sample_bandit(10, 1.0, 1.0, &mut stream_rng(*seed, Stream::Environment)).unwrap();
    let offline = collect_offline_uniform(&bandit, 1000, &mut stream_rng(*seed, Stream::Offline));
    run_bandit_experiment(&bandit, &offline, &AgentSpec::ts(), 5_000, *seed)
        .unwrap()
        .total()
}

fn fanout(c: &mut Criterion) {
    let mut group = c.benchmark_group("bandit_seeds");
    group.sample_size(10);
    for n in [4u64, 16] {
        let seeds: Vec<u64> = (1..=n).collect();
        group.bench_with_input(BenchmarkId::new("par_map", n), &seeds, |b, s| {
            b.iter(|| par::map(black_box(s), bandit_run))
        });
        group.bench_with_input(BenchmarkId::new("sequential", n), &seeds, |b, s| {
            b.iter(|| par::map_sequential(black_box(s), bandit_run))
        });
    }
    group.finish();
}

criterion_group!(benches, fanout);
criterion_main!(benches);
