use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use giplab_bench::{instance, weights};
use giplab_core::discrepancy::{disc_search, DiscInstance, SearchOptions};
use giplab_core::knapsack::{knapsack_count_with, CountMethod};
use giplab_core::numerics::calibrate_theta;
use giplab_core::random::gaussian_vector;
use giplab_core::{round_pipeline, solve_ip, solve_lp, BnbOptions, RngHandle, RoundingParams};
use std::hint::black_box;

fn lp(c: &mut Criterion) {
    let mut group = c.benchmark_group("lp");
    for (m, n) in [(2, 200), (3, 1000), (5, 2000)] {
        let inst = instance(m, n, 1);
        group.bench_with_input(BenchmarkId::from_parameter(format!("{m}x{n}")), &inst, |b, inst| {
            b.iter(|| solve_lp(black_box(inst)).unwrap())
        });
    }
    group.finish();
}

fn bnb(c: &mut Criterion) {
    let mut group = c.benchmark_group("bnb");
    group.sample_size(20);
    for n in [20, 40, 80] {
        let inst = instance(2, n, 2);
        group.bench_with_input(BenchmarkId::from_parameter(n), &inst, |b, inst| {
            b.iter(|| solve_ip(black_box(inst), &BnbOptions::default()).unwrap())
        });
    }
    group.finish();
}

fn knapsack(c: &mut Criterion) {
    let mut group = c.benchmark_group("knapsack");
    let w = weights(30, 3);
    for method in [CountMethod::DfsPruned, CountMethod::MeetInMiddle] {
        group.bench_function(format!("{method:?}/30"), |b| {
            b.iter(|| knapsack_count_with(black_box(&w), 2.0, method).unwrap())
        });
    }
    let w = weights(44, 4);
    group.bench_function("MeetInMiddle/44", |b| {
        b.iter(|| knapsack_count_with(black_box(&w), 1.0, CountMethod::MeetInMiddle).unwrap())
    });
    group.finish();
}

fn discrepancy(c: &mut Criterion) {
    let (m, k) = (2, 12);
    let p = calibrate_theta(m, k).unwrap();
    let mut rng = RngHandle::new(5, 0);
    let cols: Vec<Vec<f64>> = (0..p.universe()).map(|_| gaussian_vector(m, &mut rng)).collect();
    let inst = DiscInstance::new(cols, vec![0.0; m], p.theta, k).unwrap();
    let opts = SearchOptions { restarts: 5, moves_per_restart: 200 };
    c.bench_function("disc_search/m2_k12", |b| {
        b.iter(|| disc_search(black_box(&inst), &mut RngHandle::new(6, 0), opts))
    });
}

fn rounding(c: &mut Criterion) {
    let inst = instance(2, 400, 7);
    let lp = solve_lp(&inst).unwrap();
    let mut params = RoundingParams::with_k(2, 400, 12);
    params.theta = Some(0.01);
    c.bench_function("round_pipeline/2x400", |b| {
        b.iter(|| round_pipeline(black_box(&inst), &lp, &params, &mut RngHandle::new(8, 1)).unwrap())
    });
}

criterion_group!(benches, lp, bnb, knapsack, discrepancy, rounding);
criterion_main!(benches);
