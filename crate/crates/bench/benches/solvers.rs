use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use swr_bench::{box_problem, sine_problem};
use swr_core::solver::monolithic_solve;
use swr_core::swr::{build_pool, init_iterates, run, sweep, RunOptions};
use swr_core::theory::{growth_params, GFunction};

fn monolithic(c: &mut Criterion) {
    let mut g = c.benchmark_group("monolithic");
    for nz in [101, 201, 401] {
        let p = sine_problem(nz, 100, 1, 0.0);
        g.bench_with_input(BenchmarkId::new("interval", nz), &p, |b, p| {
            b.iter(|| monolithic_solve(&p.spec, &p.f, &p.data, &p.solver).unwrap())
        });
    }
    let p = box_problem(17, 20, 1);
    g.bench_function("box-17", |b| {
        b.iter(|| monolithic_solve(&p.spec, &p.f, &p.data, &p.solver).unwrap())
    });
    g.finish();
}

fn sweeps(c: &mut Criterion) {
    let mut g = c.benchmark_group("sweep");
    for workers in [1, 2, 4] {
        let p = box_problem(17, 20, 4);
        let pool = build_pool(workers).unwrap();
        let state = init_iterates(&p, &pool).unwrap();
        g.bench_with_input(BenchmarkId::new("box-4-bands", workers), &state, |b, s| {
            b.iter(|| sweep(&p, s, &pool).unwrap())
        });
    }
    g.finish();
    let p = sine_problem(201, 100, 2, 0.2);
    c.bench_function("swr-canonical", |b| {
        b.iter(|| {
            run(
                &p,
                &RunOptions {
                    workers: 1,
                    ..RunOptions::default()
                },
                |_| Ok(()),
            )
            .unwrap()
        })
    });
}

fn theory(c: &mut Criterion) {
    let g = GFunction::new(1.0, 1.0, 1.0, &growth_params(2.0).unwrap(), 2.0).unwrap();
    c.bench_function("g-value", |b| b.iter(|| g.value(black_box(1.0)).unwrap()));
    c.bench_function("g-inverse", |b| {
        b.iter(|| g.inverse(black_box(0.2)).unwrap())
    });
}

criterion_group!(benches, monolithic, sweeps, theory);
criterion_main!(benches);
