//! Criterion benchmarks for the data-parallel hot paths.
//!
//! Bench group names carry the active execution mode, so running
//! `cargo bench` (parallel, default features) and then
//! `cargo bench --no-default-features` (sequential) produces side-by-side
//! entries in the criterion report for a direct comparison.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use lad_core::data::summarize;
use lad_core::harness::{
    mvn_table1_loss_matrix, run_comparison, ExperimentConfig, Method, Scenario,
};
use lad_core::models::{gmm_fit_em, simulate_dgp, DgpKind, DgpSpec};
use lad_core::niw::{default_prior, niw_update, sample_posterior, DrawMode};
use lad_core::par::execution_mode;
use lad_core::selector::{posterior_path, slc_scores};

fn bench_sampler(c: &mut Criterion) {
    let (z, _meta) = mvn_table1_loss_matrix(2000, 1).unwrap();
    let summary = summarize(&z);
    let post = niw_update(&default_prior(z.num_models()).unwrap(), &summary).unwrap();
    let mut group = c.benchmark_group(format!("sample_posterior/{}", execution_mode()));
    for t in [1000usize, 10_000] {
        group.bench_with_input(BenchmarkId::from_parameter(t), &t, |b, &t| {
            b.iter(|| sample_posterior(black_box(&post), t, 7, DrawMode::Compact).unwrap());
        });
    }
    group.finish();
}

fn bench_scoring(c: &mut Criterion) {
    let (z, meta) = mvn_table1_loss_matrix(2000, 1).unwrap();
    let summary = summarize(&z);
    let post = niw_update(&default_prior(z.num_models()).unwrap(), &summary).unwrap();
    let draws = sample_posterior(&post, 20_000, 7, DrawMode::Compact).unwrap();
    let alpha = 2000f64.powf(0.45);

    let mut group = c.benchmark_group(format!("slc_scores/{}", execution_mode()));
    group.bench_function("t20000_k7", |b| {
        b.iter(|| slc_scores(black_box(&draws), &meta, 0.26, alpha).unwrap());
    });
    group.finish();

    let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let mut group = c.benchmark_group(format!("posterior_path/{}", execution_mode()));
    group.bench_function("grid101_t20000", |b| {
        b.iter(|| posterior_path(black_box(&draws), &meta, &grid, 12.0, alpha).unwrap());
    });
    group.finish();
}

fn bench_em(c: &mut Criterion) {
    let xs: Vec<f64> = {
        let spec = DgpSpec {
            kind: DgpKind::Gmm {
                weights: vec![0.4, 0.35, 0.25],
                means: vec![-2.0, 1.0, 4.0],
                vars: vec![0.5, 1.0, 0.8],
            },
            seed: 3,
            n: 4000,
        };
        simulate_dgp(&spec)
            .unwrap()
            .column(0)
            .iter()
            .copied()
            .collect()
    };
    let mut group = c.benchmark_group(format!("gmm_fit_em/{}", execution_mode()));
    group.sample_size(10);
    group.bench_function("k3_restarts8_n4000", |b| {
        b.iter(|| gmm_fit_em(black_box(&xs), 3, 8, 5).unwrap());
    });
    group.finish();
}

fn bench_comparison(c: &mut Criterion) {
    let mut cfg = ExperimentConfig::new(Scenario::MvnTable1, vec![500], vec![0.26], 16);
    cfg.methods = vec![Method::LadSoft, Method::Aic];
    cfg.t_draws = 500;
    let mut group = c.benchmark_group(format!("run_comparison/{}", execution_mode()));
    group.sample_size(10);
    group.bench_function("reps16_n500", |b| {
        b.iter(|| run_comparison(black_box(&cfg)).unwrap());
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_sampler,
    bench_scoring,
    bench_em,
    bench_comparison
);
criterion_main!(benches);
