//! Benchmarks of the numerically heavy paths: dense eigensolves,
//! invariant laws, single-flip sampling, audits, and grid powers.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use mcmclab_bench::{certified_magnetization_chain, ising_256};
use mcmclab_core::contkernel::{ar1_grid, Ar1Model};
use mcmclab_core::lyapunov::contraction_audit;
use mcmclab_core::markov::{coupling_diagonal_time, invariant_distribution};
use mcmclab_core::models::{knight_chain, IsingModel, SpinConfig};
use mcmclab_core::rng::RngStream;
use mcmclab_core::sampler::{glauber_step, AcceptanceRule};
use mcmclab_core::spectral::full_spectrum;

fn bench_full_spectrum(c: &mut Criterion) {
    let p = knight_chain();
    c.bench_function("full_spectrum_64_states", |b| {
        b.iter(|| full_spectrum(black_box(&p)).unwrap())
    });
}

fn bench_invariant_distribution(c: &mut Criterion) {
    let p = ising_256();
    c.bench_function("invariant_distribution_256_states", |b| {
        b.iter(|| invariant_distribution(black_box(&p)).unwrap())
    });
}

fn bench_glauber_steps(c: &mut Criterion) {
    let model = IsingModel::new(64, 0.5, 0.5, None).unwrap();
    let rule = AcceptanceRule::heatbath(model.q);
    c.bench_function("glauber_1000_steps_64_spins", |b| {
        b.iter(|| {
            let mut rng = RngStream::new(7, 0);
            let mut x = SpinConfig::all_plus(64);
            for _ in 0..1000 {
                let (next, _, _) = glauber_step(&model, &x, &rule, &mut rng);
                x = next;
            }
            x.magnetization()
        })
    });
}

fn bench_contraction_audit(c: &mut Criterion) {
    let (p, cert) = certified_magnetization_chain();
    c.bench_function("contraction_audit_50_pairs", |b| {
        b.iter(|| {
            let mut rng = RngStream::new(3, 0);
            contraction_audit(black_box(&p), black_box(&cert), 50, &mut rng).unwrap()
        })
    });
}

fn bench_grid_discretization(c: &mut Criterion) {
    let model = Ar1Model::new(0.5, 1.0).unwrap();
    c.bench_function("ar1_grid_257_nodes", |b| {
        b.iter(|| ar1_grid(black_box(&model), None, 257).unwrap())
    });
}

fn bench_coupling_replicas(c: &mut Criterion) {
    let p = knight_chain();
    let pi = invariant_distribution(&p).unwrap();
    let mut nu = vec![0.0; p.n()];
    nu[0] = 1.0;
    let base = RngStream::new(5, 0);
    c.bench_function("coupling_tail_2000_replicas", |b| {
        b.iter(|| coupling_diagonal_time(black_box(&p), &nu, &pi, 64, 2000, &base).unwrap())
    });
}

criterion_group!(
    benches,
    bench_full_spectrum,
    bench_invariant_distribution,
    bench_glauber_steps,
    bench_contraction_audit,
    bench_grid_discretization,
    bench_coupling_replicas
);
criterion_main!(benches);
