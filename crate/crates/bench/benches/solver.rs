use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lasskit_bench::{blob_instance, queries};
use lasskit_core::lass::{solve, AdmmSolver, Backend, SolverConfig};
use lasskit_core::linsolve::ShiftedFactor;
use lasskit_core::oos::{OosModel, OosQuery};
use lasskit_core::simplex::project_simplex;

fn simplex(c: &mut Criterion) {
    let mut group = c.benchmark_group("project_simplex");
    for k in [2, 10, 100] {
        let v: Vec<f64> = (0..k).map(|i| ((i * 37) % 11) as f64 / 7.0 - 0.5).collect();
        group.bench_with_input(BenchmarkId::from_parameter(k), &v, |b, v| b.iter(|| project_simplex(black_box(v))));
    }
    group.finish();
}

fn factorization(c: &mut Criterion) {
    let mut group = c.benchmark_group("factorize");
    group.sample_size(10);
    for n in [2_000, 10_000] {
        let inst = blob_instance(n, 5);
        let l = inst.problem.laplacian();
        group.bench_function(BenchmarkId::from_parameter(n), |b| b.iter(|| ShiftedFactor::factorize(l, 1.0, 1.0)));
    }
    group.finish();
}

fn admm_iteration(c: &mut Criterion) {
    let mut group = c.benchmark_group("admm_iteration");
    group.sample_size(10);
    for n in [5_000, 10_000] {
        let inst = blob_instance(n, 10);
        let solver = AdmmSolver::new(&inst.problem, 1.0, Backend::Cholesky).unwrap();
        let mut state = solver.init_state(None).unwrap();
        group.bench_function(BenchmarkId::from_parameter(n), |b| b.iter(|| solver.iterate(&mut state).unwrap()));
    }
    group.finish();
}

fn out_of_sample(c: &mut Criterion) {
    let inst = blob_instance(5_000, 5);
    let z = solve(&inst.problem, &SolverConfig::default(), None).unwrap().z;
    let qs = queries(inst.w.n(), 64, 10);
    let mut group = c.benchmark_group("oos");
    group.bench_function("predict_uncached", |b| {
        b.iter(|| {
            let model = OosModel::with_cache_capacity(z.clone(), 0).unwrap();
            for w in &qs {
                black_box(model.predict(&OosQuery { w: w.clone(), g: vec![0.1; 5], lambda: 1.0 }).unwrap());
            }
        })
    });
    let model = OosModel::new(z.clone()).unwrap();
    let lambdas: Vec<f64> = (1..=100).map(|i| i as f64 / 10.0).collect();
    group.bench_function("lambda_path_100", |b| {
        b.iter(|| model.lambda_path(&qs[0], &[0.1, -0.2, 0.0, 0.3, 0.0], &lambdas).unwrap())
    });
    group.finish();
}

criterion_group!(benches, simplex, factorization, admm_iteration, out_of_sample);
criterion_main!(benches);
