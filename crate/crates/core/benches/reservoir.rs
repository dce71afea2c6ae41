//! Parallel vs sequential throughput.
//!
//! The `parallel` group goes through `qnir::parallel`, which uses rayon when
//! the `parallel` feature is on; the `sequential` group is a plain iterator
//! over the same work. Build with `--no-default-features` and the two match.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qnir::benchmarks::Benchmark;
use qnir::optimizer::{random_init, Objective};
use qnir::pipeline::{CostSplit, ReservoirObjective};
use qnir::readout::ReadoutConfig;
use qnir::reservoir::{run_reservoir, run_reservoir_ps_blocks, ReservoirConfig};
use std::hint::black_box;

fn batch_cost(c: &mut Criterion) {
    let task = Benchmark::Narma2.task(None).unwrap();
    let cfg = ReservoirConfig::pair_separable(12);
    let objective = ReservoirObjective::new(&task, cfg, ReadoutConfig::default(), CostSplit::Test).unwrap();
    let batch: Vec<Vec<f64>> = (0..16).map(|s| random_init(cfg.parameter_count(), s).into_inner()).collect();

    let mut group = c.benchmark_group("batch_cost_ps12");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| qnir::parallel::map(&batch, |p| objective.cost(black_box(p))))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| batch.iter().map(|p| objective.cost(black_box(p))).collect::<Vec<_>>())
    });
    group.finish();
}

fn ps_blocks(c: &mut Criterion) {
    let task = Benchmark::Narma2.task(None).unwrap();
    let mut group = c.benchmark_group("ps_run");
    group.sample_size(10);
    for n in [4, 8] {
        let cfg = ReservoirConfig::pair_separable(n);
        let p = random_init(cfg.parameter_count(), 1);
        group.bench_with_input(BenchmarkId::new("blocks", n), &n, |b, _| {
            b.iter(|| run_reservoir_ps_blocks(black_box(&task.input), &cfg, &p).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("full_register", n), &n, |b, _| {
            b.iter(|| run_reservoir(black_box(&task.input), &cfg, &p).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, batch_cost, ps_blocks);
criterion_main!(benches);
