use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lonely_passenger::combinatorics::stirling_ratio_failures;
use lonely_passenger::coupling::{run_bulk, Coupler, CouplingKind, Predicate, RngSeed};
use lonely_passenger::dominance::verify_theorem;
use lonely_passenger::mc::estimate_p;
use lonely_passenger::oracle::{enumerate_joint, DEFAULT_LIMIT};
use lonely_passenger::Execution;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn monte_carlo(c: &mut Criterion) {
    let mut g = c.benchmark_group("estimate_p_n20_k50_100k");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| estimate_p(black_box(20), black_box(50), 100_000, 3, exec).unwrap())
        });
    }
    g.finish();
}

fn coupling(c: &mut Criterion) {
    let coupler = Coupler::new(CouplingKind::Lonely, 10, 5).unwrap();
    let predicates = Predicate::declared_for(CouplingKind::Lonely);
    let mut g = c.benchmark_group("run_bulk_lonely_n10_l5_20k");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run_bulk(&coupler, 20_000, RngSeed(1), &predicates, false, exec))
        });
    }
    g.finish();
}

fn enumeration(c: &mut Criterion) {
    let mut g = c.benchmark_group("enumerate_joint_n8_k5");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| enumerate_joint(black_box(8), black_box(5), DEFAULT_LIMIT, exec).unwrap())
        });
    }
    g.finish();
}

fn exact_grids(c: &mut Criterion) {
    let mut g = c.benchmark_group("verify_theorem_n20_k12");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| verify_theorem(black_box(20), black_box(12), exec).unwrap())
        });
    }
    g.finish();

    let mut g = c.benchmark_group("stirling_ratio_n300");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| stirling_ratio_failures(black_box(300), exec))
        });
    }
    g.finish();
}

criterion_group!(benches, monte_carlo, coupling, enumeration, exact_grids);
criterion_main!(benches);
