//! Same workloads on a one-thread rayon pool and on the default pool.
//!
//! Built without the `parallel` feature both variants run sequentially, so
//! the numbers then measure the fallback path only.

use circledyn::algebra::parse_map;
use circledyn::dynamics::{backward_sample, julia_cloud, lyapunov_exponent, periodic_points};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().expect("pool");
    let all = rayon::ThreadPoolBuilder::new().build().expect("pool");
    vec![("sequential", one), ("parallel", all)]
}

fn bench(c: &mut Criterion) {
    let f = parse_map("(z^2-4)/(1+0.25*z)").expect("map");
    let pools = pools();

    let mut group = c.benchmark_group("periodic_points_n8");
    group.sample_size(10);
    for (name, pool) in &pools {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| periodic_points(black_box(&f), 8).expect("solve")))
        });
    }
    group.finish();

    let mut group = c.benchmark_group("julia_cloud_20k");
    group.sample_size(10);
    for (name, pool) in &pools {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| julia_cloud(black_box(&f), 20_000, 7).expect("cloud")))
        });
    }
    group.finish();

    let sample = backward_sample(&f, 200_000, 7).expect("sample");
    let mut group = c.benchmark_group("lyapunov_200k");
    for (name, pool) in &pools {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| lyapunov_exponent(black_box(&f), &sample).expect("chi")))
        });
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
