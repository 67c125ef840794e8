//! Sequential against rayon-parallel execution for the batch workloads.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kmatch::augment::FactorConfig;
use kmatch::experiment::{run_sweep, Source, SweepConfig};
use kmatch::numerics::{certify_inequalities, compute_alphas, AlphaGrid, CertifyConfig};
use kmatch::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    let cfg = SweepConfig {
        source: Source::MinDegree { n: 5_000, m: 10_000, simple: false, attempts: 1 },
        seeds: (0..8).collect(),
        factor: FactorConfig::new(2),
    };
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new("k2_n5000_8seeds", name), &exec, |b, &exec| {
            b.iter(|| run_sweep(&cfg, exec).expect("sweep runs"));
        });
    }
    group.finish();
}

fn certify(c: &mut Criterion) {
    let mut group = c.benchmark_group("certify");
    group.sample_size(10);
    let grid = AlphaGrid { step: 1e-2, ..AlphaGrid::default() };
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new("alphas_r20", name), &exec, |b, &exec| {
            b.iter(|| compute_alphas(20, grid, exec));
        });
        let alphas = compute_alphas(20, grid, exec);
        let cfg = CertifyConfig { r_max: 20, alpha_grid: grid, g_step: 0.05, rate_step: 0.05, exec, ..CertifyConfig::default() };
        group.bench_with_input(BenchmarkId::new("inequalities_r20", name), &exec, |b, _| {
            b.iter(|| certify_inequalities(&alphas, &cfg));
        });
    }
    group.finish();
}

criterion_group!(benches, sweep, certify);
criterion_main!(benches);
