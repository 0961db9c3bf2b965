use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lfpp_core::dgff::checks::empirical_second_moment;
use lfpp_core::dgff::{Backend, Sampler};
use lfpp_core::metric::{geodesic_scan, ScanConfig};
use lfpp_core::{BoxGeometry, Exec, Vertex};

fn covariance(c: &mut Criterion) {
    let sampler = Sampler::new(BoxGeometry::new(Vertex::new(0, 0), 17).unwrap(), Backend::Banded).unwrap();
    let mut g = c.benchmark_group("second_moment_side17_2000");
    for (name, exec) in [("parallel", Exec::Parallel), ("sequential", Exec::Sequential)] {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| black_box(empirical_second_moment(&sampler, 2000, 1, exec)))
        });
    }
    g.finish();
}

fn scan(c: &mut Criterion) {
    let cfg = ScanConfig {
        gamma: 0.2,
        sizes: vec![64],
        trials: 16,
        kappa: 0.5,
        seed: 1,
    };
    let mut g = c.benchmark_group("geodesic_scan_n64_16");
    for (name, exec) in [("parallel", Exec::Parallel), ("sequential", Exec::Sequential)] {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| black_box(geodesic_scan(&cfg, exec).unwrap()))
        });
    }
    g.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = covariance, scan
}
criterion_main!(benches);
