//! Run once with default features and once with `--no-default-features`;
//! the group name records which mode was measured.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use tubepw::cone_geometry::{BaseRegion, ConeSpec};
use tubepw::mixed_norms::{mixed_norm, NormParams};
use tubepw::par;
use tubepw::spectral_models::SpectralDensity;
use tubepw::transforms::{recover_density, QuadSpec, TubeFunction};
use tubepw::weights::WeightFn;

fn mode() -> &'static str {
    if par::is_parallel() {
        "parallel"
    } else {
        "sequential"
    }
}

fn bench(c: &mut Criterion) {
    let q = QuadSpec::default();
    let f = TubeFunction::closed_form(SpectralDensity::truncated_exponential_1d(1.0, 0).unwrap());
    let base = BaseRegion::truncated_cone(ConeSpec::orthant(1), 1e-3, 50.0).unwrap();
    let w = WeightFn::zero(base.clone());
    let np = NormParams::new(2.0, 1.0).unwrap();

    let mut g = c.benchmark_group(mode());
    g.sample_size(10);
    g.bench_function("recover_density", |b| b.iter(|| recover_density(black_box(&f), &[0.5], &q).unwrap()));
    g.bench_function("mixed_norm", |b| b.iter(|| mixed_norm(black_box(&f), &base, &w, np, &q).unwrap()));
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
