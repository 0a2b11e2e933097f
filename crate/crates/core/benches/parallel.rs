//! Compares the parallel graph sweep against its sequential twin on the
//! contracting example. Run with --no-default-features to see the
//! fallback path; manifold_graph_seq is callable either way.

use criterion::{criterion_group, criterion_main, Criterion};
use levyslow_core::levy_noise::{sample_path, RngStream, StableParams};
use levyslow_core::presets::example2;
use levyslow_core::slow_manifold::{manifold_graph, manifold_graph_seq, ManifoldConfig};
use std::hint::black_box;

fn graph_sweep(c: &mut Criterion) {
    let spec = example2(0.05, 1.5, 8, 1.0, 0.1, 0.0).unwrap();
    let dt = 5e-4;
    let config = ManifoldConfig::with_default_horizon(&spec, dt, 40, 1e-9).unwrap();
    let params = StableParams::new(1.5, 1.0).unwrap();
    // the fast convolution looks one truncation window past the horizon
    let t_start = -config.horizon() - 0.7;
    let path = sample_path(&params, t_start, dt, dt, &mut RngStream::new(41, 0)).unwrap();
    let y0s: Vec<Vec<f64>> = (0..8).map(|i| vec![-2.0 + 0.5 * i as f64]).collect();
    for point in manifold_graph_seq(&spec, (&path, &path), y0s.clone(), &config) {
        point.unwrap();
    }

    let mut group = c.benchmark_group("graph_sweep");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| {
            manifold_graph(
                black_box(&spec),
                (black_box(&path), black_box(&path)),
                black_box(y0s.clone()),
                black_box(&config),
            )
        })
    });
    group.bench_function("sequential", |b| {
        b.iter(|| {
            manifold_graph_seq(
                black_box(&spec),
                (black_box(&path), black_box(&path)),
                black_box(y0s.clone()),
                black_box(&config),
            )
        })
    });
    group.finish();
}

criterion_group!(benches, graph_sweep);
criterion_main!(benches);
