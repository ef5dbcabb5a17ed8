use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use clawpath::filippov::{flow_map, trace};
use clawpath::fronttrack::front_track;
use clawpath::godunov::godunov_solve;
use clawpath::scenario::presets;
use clawpath::{GodunovOptions, PiecewiseConstant1D, VelocityField};

fn example_6() -> PiecewiseConstant1D {
    let init = presets::initial_data("example_6").unwrap().initial;
    PiecewiseConstant1D::new(init.breakpoints, init.values).unwrap()
}

fn fronts(c: &mut Criterion) {
    let f = clawpath::FluxSpec::Burgers.build(-4.0, 4.0).unwrap();
    let u0 = example_6();
    let mut group = c.benchmark_group("front_track/example_6");
    for inv in [64u32, 256, 1024] {
        group.bench_with_input(BenchmarkId::from_parameter(inv), &inv, |b, &inv| {
            b.iter(|| front_track(&u0, &f, 1.0 / inv as f64, black_box(4.0)).unwrap())
        });
    }
    group.finish();
}

fn paths(c: &mut Criterion) {
    let f = clawpath::FluxSpec::Burgers.build(-4.0, 4.0).unwrap();
    let u0 = example_6();
    let sol = front_track(&u0, &f, 1.0 / 256.0, 4.0).unwrap();
    let field = VelocityField::over_fronts(&sol, &f, 0.5).unwrap();
    c.bench_function("trace/example_6", |b| b.iter(|| trace(&field, (black_box(0.3), 0.0), 4.0).unwrap()));
    let starts: Vec<f64> = (0..1001).map(|i| -1.0 + 3.0 * i as f64 / 1000.0).collect();
    c.bench_function("flow_map/example_6/1001", |b| {
        b.iter(|| flow_map(&field, 0.0, black_box(&starts), &[1.0, 2.0, 4.0]).unwrap())
    });
}

fn grid(c: &mut Criterion) {
    let f = clawpath::FluxSpec::Burgers.build(-4.0, 4.0).unwrap();
    let u0 = example_6();
    let opts = GodunovOptions::new(-2.0, 4.0, 1.0 / 200.0, 1.0);
    c.bench_function("godunov/example_6/dx=1/200", |b| b.iter(|| godunov_solve(&u0, &f, black_box(&opts)).unwrap()));
}

criterion_group!(benches, fronts, paths, grid);
criterion_main!(benches);
