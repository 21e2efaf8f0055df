use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use cirsim_core::engines::exact_cir_path;
use cirsim_core::model::marginal_law;
use cirsim_core::schemes::{additive_scheme, rademacher_noise, truncated_scheme};
use cirsim_core::stats::noncentral_chisq_cdf;
use cirsim_core::truncated::{hitting_probability, scale_function};
use cirsim_core::{CirParams, GridSpec, PathRng, TruncationLevel};

fn params() -> CirParams {
    CirParams::new(1.0, 1.0, 1.0).unwrap()
}

fn schemes(c: &mut Criterion) {
    let p = params();
    let cap = TruncationLevel::new(5.0, &p).unwrap();
    let mut group = c.benchmark_group("scheme_path");
    for n in [64, 512, 4096] {
        let grid = GridSpec::new(1.0, n).unwrap();
        group.bench_with_input(BenchmarkId::new("additive", n), &grid, |b, g| {
            let mut i = 0;
            b.iter(|| {
                i += 1;
                let noise = rademacher_noise(g, &mut PathRng::new(1, i));
                black_box(additive_scheme(&p, g, &noise).unwrap().terminal())
            })
        });
        group.bench_with_input(BenchmarkId::new("truncated", n), &grid, |b, g| {
            let mut i = 0;
            b.iter(|| {
                i += 1;
                let noise = rademacher_noise(g, &mut PathRng::new(1, i));
                black_box(truncated_scheme(&p, cap, g, &noise).unwrap().terminal())
            })
        });
    }
    group.finish();
}

fn exact_paths(c: &mut Criterion) {
    let p = params();
    let grid = GridSpec::new(1.0, 4096).unwrap();
    c.bench_function("exact_cir_path_4096", |b| {
        let mut i = 0;
        b.iter(|| {
            i += 1;
            black_box(
                exact_cir_path(&p, &grid, &mut PathRng::new(2, i))
                    .unwrap()
                    .terminal(),
            )
        })
    });
}

fn oracles(c: &mut Criterion) {
    let p = params();
    let spec = marginal_law(&p, 1.0).unwrap();
    c.bench_function("noncentral_chisq_cdf", |b| {
        b.iter(|| black_box(noncentral_chisq_cdf(&spec, black_box(1.3)).unwrap()))
    });
    let cap = TruncationLevel::new(1.5, &p).unwrap();
    c.bench_function("scale_function_tail", |b| {
        b.iter(|| black_box(scale_function(black_box(2.5), &p, cap).unwrap().value))
    });
    c.bench_function("hitting_probability", |b| {
        b.iter(|| {
            black_box(
                hitting_probability(&p, cap, 0.5, 3.0)
                    .unwrap()
                    .p_alpha_first,
            )
        })
    });
}

criterion_group!(benches, schemes, exact_paths, oracles);
criterion_main!(benches);
