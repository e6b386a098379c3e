//! Criterion benchmarks for the hot paths: scenario generation, model
//! fitting and batch prediction.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use vwqc::simgen::{generate, ScenarioKind, ScenarioSpec};
use vwqc::vwqc::{fit, predict_dataset, FitConfig};

fn spec(kind: ScenarioKind, n: usize, p: usize, correlated: bool) -> ScenarioSpec {
    ScenarioSpec {
        kind,
        n,
        p,
        relevant_fraction: 1.0,
        correlated,
        seed: 42,
        standardize: false,
        shift_after_transform: false,
    }
}

fn bench_generate(c: &mut Criterion) {
    let mut group = c.benchmark_group("generate");
    for (label, s) in [
        ("exp_n100_p50", spec(ScenarioKind::Exp, 100, 50, false)),
        ("t3_n100_p50_corr", spec(ScenarioKind::T3, 100, 50, true)),
        ("ddv_n500_p50", spec(ScenarioKind::Ddv, 500, 50, false)),
    ] {
        group.bench_function(BenchmarkId::from_parameter(label), |b| {
            b.iter(|| generate(black_box(&s)).unwrap())
        });
    }
    group.finish();
}

fn bench_fit(c: &mut Criterion) {
    let mut group = c.benchmark_group("fit");
    group.sample_size(20);
    for (label, s) in [
        ("exp_n100_p50", spec(ScenarioKind::Exp, 100, 50, false)),
        ("t3_n500_p10", spec(ScenarioKind::T3, 500, 10, false)),
    ] {
        let (train, _) = generate(&s).unwrap();
        let config = FitConfig {
            seed: 7,
            parallel_restarts: false,
            ..FitConfig::default()
        };
        group.bench_function(BenchmarkId::from_parameter(label), |b| {
            b.iter(|| fit(black_box(&train), black_box(&config)).unwrap())
        });
    }
    group.finish();
}

fn bench_predict(c: &mut Criterion) {
    let s = spec(ScenarioKind::Exp, 500, 50, false);
    let (train, test) = generate(&s).unwrap();
    let config = FitConfig {
        seed: 7,
        ..FitConfig::default()
    };
    let (model, _) = fit(&train, &config).unwrap();
    c.bench_function("predict/exp_n500_p50", |b| {
        b.iter(|| predict_dataset(black_box(&model), black_box(&test)).unwrap())
    });
}

criterion_group!(benches, bench_generate, bench_fit, bench_predict);
criterion_main!(benches);
