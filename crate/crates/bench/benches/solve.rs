use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ldesval::fixtures::{self, FixtureOptions};
use ldesval::model::build_model;
use ldesval::solver::solve;
use ldesval::tdr::build_reduction;
use ldesval::SolveOptions;
use ldesval_bench::seasonal;

fn build_and_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("build_and_solve");
    group.sample_size(10);
    for (hours, days) in [(24 * 7, 7), (24 * 28, 7), (24 * 28, 28)] {
        let s = seasonal(hours, days);
        group.bench_with_input(BenchmarkId::from_parameter(&s.name), &s, |b, s| {
            b.iter(|| {
                let model = build_model(&s.system, &s.rps, &s.config).unwrap();
                solve(&model.lp, &SolveOptions::default()).unwrap()
            })
        });
    }
    group.finish();
}

fn model_build(c: &mut Criterion) {
    let s = seasonal(8760, 30);
    c.bench_function("build_30_days_of_a_year", |b| {
        b.iter(|| build_model(&s.system, &s.rps, &s.config).unwrap())
    });
}

fn reduction(c: &mut Criterion) {
    let system = fixtures::seasonal_one_zone(&FixtureOptions::default());
    let mut group = c.benchmark_group("reduction");
    group.sample_size(10);
    for k in [10, 40] {
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, &k| {
            b.iter(|| build_reduction(&system, 24, k, 0).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, build_and_solve, model_build, reduction);
criterion_main!(benches);
