use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use ricciwalk_core::explosion::{feller_test, simulate_1d, DriftSpec};
use ricciwalk_core::frame::{simulate_path, SimulationConfig, StartPoint};
use ricciwalk_core::EvolvingMetricModel;

fn frame_paths(c: &mut Criterion) {
    let mut group = c.benchmark_group("frame_path_1000_steps");
    let models = [
        ("euclidean_d3", EvolvingMetricModel::euclidean(3, 1.0)),
        ("sphere_d2", EvolvingMetricModel::sphere(2, 1.0, 1.0).unwrap()),
        ("hyperbolic_d2", EvolvingMetricModel::hyperbolic(2, 1.0, 1.0).unwrap()),
    ];
    for (name, model) in models {
        let start = StartPoint::new(model.point_at_distance(0.0, 1.0));
        let mut cfg = SimulationConfig::new(1.0, 1e-3);
        cfg.record_every = 0;
        let mut index = 0;
        group.bench_function(name, |b| {
            b.iter(|| {
                index += 1;
                black_box(simulate_path(&model, &start, &cfg, None, 1, index))
            })
        });
    }
    group.finish();
}

fn feller(c: &mut Criterion) {
    let drift = DriftSpec::Coth { dim: 3.0, k: 1.0 };
    c.bench_function("feller_test_coth", |b| b.iter(|| black_box(feller_test(&drift, 1.0, 1e6, 0.05))));
    let bessel = DriftSpec::Bessel { dim: 3.0 };
    let mut index = 0;
    c.bench_function("simulate_1d_bessel", |b| {
        b.iter(|| {
            index += 1;
            black_box(simulate_1d(&bessel, 2.0, 1.0, 1e-3, 1, index, 1e6))
        })
    });
}

criterion_group!(benches, frame_paths, feller);
criterion_main!(benches);
