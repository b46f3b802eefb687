use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use quditlab::circuit::{triangular_phases, NoiseModel};
use quditlab::correlations::{bootstrap_errors, sample_counts, setting_rng};
use quditlab::linalg::haar_vector;
use quditlab::nonlocality::{ideal_table, satwap_value};
use quditlab::steering::{randomness_from_beta, RandomnessOptions};
use quditlab::tomography::{
    cs_reconstruct, measure_operators, sample_operators, MeasureOptions, Method, TomographyJob,
};
use quditlab::{make_pure_state, maximally_entangled};

fn bell(c: &mut Criterion) {
    let mut g = c.benchmark_group("satwap_exact");
    for d in [2, 4, 8] {
        g.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, &d| {
            b.iter(|| satwap_value(&ideal_table(black_box(d)).unwrap()).unwrap())
        });
    }
    g.finish();
}

fn bootstrap(c: &mut Criterion) {
    let t = sample_counts(&ideal_table(3).unwrap(), 10_000, &NoiseModel::ideal(), 1).unwrap();
    c.bench_function("bootstrap_satwap_d3_100", |b| {
        b.iter(|| bootstrap_errors(&t, |t| satwap_value(t).map(|r| r.value), 100, 2).unwrap())
    });
}

fn compile(c: &mut Criterion) {
    let mut g = c.benchmark_group("mesh_compile");
    for d in [4, 16] {
        let psi = make_pure_state(&haar_vector(d, &mut setting_rng(3, d as u64))).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(d), &psi, |b, psi| {
            b.iter(|| triangular_phases(black_box(psi)).unwrap())
        });
    }
    g.finish();
}

fn randomness(c: &mut Criterion) {
    let mut g = c.benchmark_group("randomness_sdp");
    g.sample_size(10);
    for d in [2, 3] {
        g.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, &d| {
            b.iter(|| randomness_from_beta(d, 1.9, None, &RandomnessOptions::default()).unwrap())
        });
    }
    g.finish();
}

fn tomography(c: &mut Criterion) {
    let psi = maximally_entangled(4);
    let ops = sample_operators(4, 50, 1).unwrap();
    let data = measure_operators(&psi.density(), &ops, 0, 1, MeasureOptions::default()).unwrap();
    let job = TomographyJob::new(4, data, Method::Cs);
    let mut g = c.benchmark_group("tomography");
    g.sample_size(10);
    g.bench_function("cs_d4_m50", |b| b.iter(|| cs_reconstruct(&job).unwrap()));
    g.finish();
}

criterion_group!(benches, bell, bootstrap, compile, randomness, tomography);
criterion_main!(benches);
