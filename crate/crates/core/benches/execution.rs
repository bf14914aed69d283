//! Sequential against rayon execution of independent replications.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kurtosis_ucb::env::{ArmDistribution, BanditInstance};
use kurtosis_ucb::harness::{mom_coverage, run_replications, Algorithm, ExperimentConfig};
use kurtosis_ucb::Execution;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn replications(c: &mut Criterion) {
    let instance = BanditInstance::new(
        "gauss2",
        vec![
            ArmDistribution::gaussian(1.0, 1.0).unwrap(),
            ArmDistribution::gaussian(0.0, 1.0).unwrap(),
        ],
        Some(3.0),
    )
    .unwrap();
    let mut group = c.benchmark_group("replications");
    group.sample_size(10);
    for (name, mode) in MODES {
        let mut config =
            ExperimentConfig::new(instance.clone(), 5_000, 8, 1, Algorithm::KurtosisUcb).unwrap();
        config.execution = mode;
        group.bench_with_input(BenchmarkId::new(name, "8x5000"), &config, |b, cfg| {
            b.iter(|| black_box(run_replications(cfg).unwrap()))
        });
    }
    group.finish();
}

fn coverage(c: &mut Criterion) {
    let dist = ArmDistribution::laplace(0.0, 1.0).unwrap();
    let mut group = c.benchmark_group("mom_coverage");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::new(name, "2000x300"), |b| {
            b.iter(|| black_box(mom_coverage("laplace", &dist, 300, 0.1, 2_000, 1, mode)))
        });
    }
    group.finish();
}

criterion_group!(benches, replications, coverage);
criterion_main!(benches);
