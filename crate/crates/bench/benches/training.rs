//! Cleartext benchmarks: full training runs per algorithm plus the
//! gradient, fixed-Hessian, and curvature-scan kernels they rest on.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lffr_core::activation::delta_bound_oracle;
use lffr_core::data::{normalize_targets, synth};
use lffr_core::matrix::Matrix;
use lffr_core::models::{grad_lffr, grad_linear, train, ModelKind, SigmoidImpl, TrainConfig};
use lffr_core::sfh::{build_sfh_lffr, build_sfh_linear};

fn bench_train(c: &mut Criterion) {
    let (ds, _) = synth(200, 8, 2, 0.05, 1);
    let cfg = TrainConfig::new(10);
    let mut group = c.benchmark_group("train_n200_d8_c2_k10");
    for kind in [
        ModelKind::Linear,
        ModelKind::YnormLinear,
        ModelKind::Lffr,
        ModelKind::ImprovedLffr,
    ] {
        group.bench_function(BenchmarkId::from_parameter(format!("{kind:?}")), |b| {
            b.iter(|| train(black_box(&ds), kind, &cfg).unwrap());
        });
    }
    group.finish();
}

fn bench_kernels(c: &mut Criterion) {
    let (ds, _) = synth(512, 16, 1, 0.05, 2);
    let (ybar, _) = normalize_targets(&ds.y, 1e-8);
    let w = Matrix::zeros(1, ds.x.cols());

    c.bench_function("grad_linear_n512_d16", |b| {
        b.iter(|| grad_linear(black_box(&ds.x), black_box(&ds.y), black_box(&w)).unwrap());
    });
    c.bench_function("grad_lffr_n512_d16", |b| {
        b.iter(|| {
            grad_lffr(
                black_box(&ds.x),
                black_box(&ybar),
                black_box(&w),
                SigmoidImpl::Exact,
            )
            .unwrap()
        });
    });
    c.bench_function("sfh_linear_n512_d16", |b| {
        b.iter(|| build_sfh_linear(black_box(&ds.x), 1e-8));
    });
    c.bench_function("sfh_lffr_n512_d16", |b| {
        b.iter(|| build_sfh_lffr(black_box(&ds.x), 1e-8));
    });
}

fn bench_curvature_scan(c: &mut Criterion) {
    c.bench_function("delta_bound_oracle_step_1e-3", |b| {
        b.iter(|| delta_bound_oracle(black_box(1e-3)));
    });
}

criterion_group!(benches, bench_train, bench_kernels, bench_curvature_scan);
criterion_main!(benches);
