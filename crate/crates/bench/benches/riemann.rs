use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use clawpath::flux::convex_envelope;
use clawpath::riemann::{particle_velocity, particle_velocity_with};
use clawpath::FluxSpec;

fn envelopes(c: &mut Criterion) {
    let f = FluxSpec::Cubic.build(-2.0, 2.0).unwrap();
    let mut group = c.benchmark_group("convex_envelope");
    for n in [257usize, 4097, 65537] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| convex_envelope(&f, black_box(-1.5), black_box(1.5), n).unwrap())
        });
    }
    group.finish();
}

fn velocities(c: &mut Criterion) {
    let burgers = FluxSpec::Burgers.build(-2.0, 2.0).unwrap();
    let cubic = FluxSpec::Cubic.build(-2.0, 2.0).unwrap();
    c.bench_function("particle_velocity/burgers_shock", |b| {
        b.iter(|| particle_velocity(&burgers, black_box(2.0), black_box(1.0), black_box(0.0)).unwrap())
    });
    c.bench_function("particle_velocity/cubic_outside", |b| {
        b.iter(|| particle_velocity(&cubic, black_box(-1.0), black_box(1.0), black_box(1.7)).unwrap())
    });
    c.bench_function("particle_velocity/cubic_coarse", |b| {
        b.iter(|| particle_velocity_with(&cubic, black_box(-1.0), black_box(1.0), black_box(0.3), 257).unwrap())
    });
}

criterion_group!(benches, envelopes, velocities);
criterion_main!(benches);
