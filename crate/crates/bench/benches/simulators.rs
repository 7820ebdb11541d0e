use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use predsched::adversary::{gen_random_instance, worst_case_family_lppt, GeneratorConfig};
use predsched::bounds::{lb_preemptive, ratio_lppt_m3, rational_grid, ub_lppt_general, AlphaSquared};
use predsched::lppt::run_lppt;
use predsched::oracles::{opt_nonpreemptive, opt_nonpreemptive_exhaustive};
use predsched::pprr::{realize_fluid, run_pprr};
use predsched::{rat, Instance};

fn instance(m: usize, n: usize, seed: u64) -> Instance {
    let config = GeneratorConfig {
        min_jobs: n,
        ..GeneratorConfig::new(m, n, AlphaSquared::new(rat(4, 1)).unwrap(), seed)
    };
    gen_random_instance(&config).unwrap()
}

fn simulators(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate");
    for n in [8usize, 32, 128] {
        let inst = instance(4, n, 1);
        group.bench_with_input(BenchmarkId::new("lppt", n), &inst, |b, i| b.iter(|| run_lppt(black_box(i))));
        group.bench_with_input(BenchmarkId::new("pprr", n), &inst, |b, i| b.iter(|| run_pprr(black_box(i))));
        let fluid = run_pprr(&inst).fluid;
        group.bench_with_input(BenchmarkId::new("realize_fluid", n), &fluid, |b, f| {
            b.iter(|| realize_fluid(black_box(f), 4).unwrap())
        });
    }
    group.finish();
}

fn oracles(c: &mut Criterion) {
    let mut group = c.benchmark_group("opt_nonpreemptive");
    for n in [10usize, 14] {
        let inst = instance(3, n, 7);
        group.bench_with_input(BenchmarkId::new("branch_and_bound", n), &inst, |b, i| {
            b.iter(|| opt_nonpreemptive(black_box(i), None))
        });
    }
    let small = instance(3, 9, 7);
    group.bench_function("exhaustive/9", |b| b.iter(|| opt_nonpreemptive_exhaustive(black_box(&small)).unwrap()));
    let family = worst_case_family_lppt(5);
    group.bench_function("family/m=5", |b| b.iter(|| opt_nonpreemptive(black_box(&family), None)));
    group.finish();
}

fn bounds(c: &mut Criterion) {
    let grid: Vec<AlphaSquared> = rational_grid(&rat(1, 1), &rat(12, 1), &rat(1, 32))
        .into_iter()
        .map(|x| AlphaSquared::new(x).unwrap())
        .collect();
    c.bench_function("bounds/grid", |b| {
        b.iter(|| {
            for x in &grid {
                black_box(ub_lppt_general(5, x));
                black_box(ratio_lppt_m3(x));
                black_box(lb_preemptive(5, x));
            }
        })
    });
}

criterion_group!(benches, simulators, oracles, bounds);
criterion_main!(benches);
