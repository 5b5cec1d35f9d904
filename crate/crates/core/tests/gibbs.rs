//! Long-run sampler checks: Glauber occupation against the exact Gibbs
//! law, Kawasaki against the conditional law on its conserved sector,
//! the trajectory-variance bound, and hit-or-miss unbiasedness.

use std::collections::HashMap;

use mcmclab_core::markov::StochasticMatrix;
use mcmclab_core::models::{ising_energy, IsingModel, SpinConfig};
use mcmclab_core::rng::RngStream;
use mcmclab_core::sampler::{
    gibbs_distribution, glauber_step, ising_state_space, kawasaki_step, matrix_step,
    mc_volume, mcmc_estimate, plan_samples, AcceptanceRule, Inequality, DEFAULT_BATCHES,
};

#[test]
fn glauber_occupation_matches_gibbs() {
    let n = 8;
    let model = IsingModel::new(n, 0.5, 0.5, None).unwrap();
    let rule = AcceptanceRule::metropolis(model.q);
    let (h, _) = ising_state_space(&model);
    let gibbs = gibbs_distribution(&h, model.beta).unwrap();

    let steps = 10_000_000u64;
    let mut rng = RngStream::new(7, 0);
    let mut x = SpinConfig::all_plus(n);
    let mut counts = vec![0u64; 1 << n];
    for _ in 0..steps {
        counts[x.code() as usize] += 1;
        let (next, _, _) = glauber_step(&model, &x, &rule, &mut rng);
        x = next;
    }
    let tv: f64 = counts
        .iter()
        .zip(&gibbs)
        .map(|(&c, &g)| (c as f64 / steps as f64 - g).abs())
        .sum::<f64>()
        / 2.0;
    assert!(tv <= 0.02, "TV {tv}");
}

#[test]
fn kawasaki_occupation_matches_conditional_gibbs() {
    let n = 8;
    let model = IsingModel::new(n, 0.5, 0.3, None).unwrap();
    let rule = AcceptanceRule::metropolis(model.q);
    let start = SpinConfig::new(vec![1, 1, 1, 1, -1, -1, -1, -1]).unwrap();
    let m0 = start.magnetization();

    // Conditional Gibbs law on the fixed-magnetization sector.
    let mut sector = Vec::new();
    for code in 0..(1u64 << n) {
        let x = SpinConfig::from_code(code, n);
        if x.magnetization() == m0 {
            sector.push(code);
        }
    }
    let weights: HashMap<u64, f64> = {
        let energies: Vec<f64> = sector
            .iter()
            .map(|&code| ising_energy(&model, &SpinConfig::from_code(code, n)))
            .collect();
        let min = energies.iter().cloned().fold(f64::INFINITY, f64::min);
        let raw: Vec<f64> = energies
            .iter()
            .map(|&e| (-model.beta * (e - min)).exp())
            .collect();
        let z: f64 = raw.iter().sum();
        sector
            .iter()
            .zip(&raw)
            .map(|(&code, &w)| (code, w / z))
            .collect()
    };

    let steps = 2_000_000u64;
    let mut rng = RngStream::new(11, 0);
    let mut x = start;
    let mut counts: HashMap<u64, u64> = HashMap::new();
    for _ in 0..steps {
        *counts.entry(x.code()).or_insert(0) += 1;
        let (next, _) = kawasaki_step(&model, &x, &rule, &mut rng).unwrap();
        assert_eq!(next.magnetization(), m0, "exchange must conserve the sector");
        x = next;
    }
    let tv: f64 = weights
        .iter()
        .map(|(code, &w)| {
            let emp = *counts.get(code).unwrap_or(&0) as f64 / steps as f64;
            (emp - w).abs()
        })
        .sum::<f64>()
        / 2.0;
    assert!(tv <= 0.02, "TV {tv}");
}

#[test]
fn trajectory_variance_respects_reversible_bound() {
    // Two-state chain with rho = 1/3: over many stationary restarts the
    // empirical variance of S_n must sit below (1/n) * 2 * Var(Y) plus
    // three repetition standard errors.
    let p = StochasticMatrix::from_rows(
        &[vec![1.0 / 3.0, 2.0 / 3.0], vec![2.0 / 3.0, 1.0 / 3.0]],
        1e-12,
    )
    .unwrap();
    let reps = 200usize;
    let n = 100_000u64;
    let mut means = Vec::with_capacity(reps);
    for rep in 0..reps {
        let mut rng = RngStream::new(1234, rep as u64);
        let initial = usize::from(rng.next_f64() < 0.5);
        let report = mcmc_estimate(
            initial,
            |s, r| matrix_step(&p, s, r),
            |s| (*s == 1) as u64 as f64,
            n,
            0,
            DEFAULT_BATCHES,
            Some(1.0 / 3.0),
            &mut rng,
        )
        .unwrap();
        means.push(report.mean);
    }
    let grand = means.iter().sum::<f64>() / reps as f64;
    let deviations: Vec<f64> = means.iter().map(|&m| (m - grand).powi(2)).collect();
    let var_emp = deviations.iter().sum::<f64>() / (reps as f64 - 1.0);
    let var_of_var = {
        let mean_dev = var_emp;
        deviations
            .iter()
            .map(|&d| (d - mean_dev).powi(2))
            .sum::<f64>()
            / (reps as f64 - 1.0)
    };
    let rep_std = (var_of_var / reps as f64).sqrt();
    let rho = 1.0 / 3.0;
    let bound = (1.0 + rho) / (1.0 - rho) * 0.25 / n as f64;
    assert!(
        var_emp <= bound + 3.0 * rep_std,
        "empirical {var_emp} bound {bound} rep-std {rep_std}"
    );
}

#[test]
fn volume_estimator_is_unbiased_across_repetitions() {
    let disk = vec![Inequality::Ball {
        center: vec![0.5, 0.5],
        radius: 0.5,
    }];
    let reps = 200usize;
    let n = 1000u64;
    let mut estimates = Vec::with_capacity(reps);
    for rep in 0..reps {
        let mut rng = RngStream::new(500, rep as u64);
        let report = mc_volume(2, &disk, n, &mut rng).unwrap();
        estimates.push(report.mean);
    }
    let mean = estimates.iter().sum::<f64>() / reps as f64;
    let var = estimates
        .iter()
        .map(|&e| (e - mean).powi(2))
        .sum::<f64>()
        / (reps as f64 - 1.0);
    let se = (var / reps as f64).sqrt();
    let target = std::f64::consts::PI / 4.0;
    assert!(
        (mean - target).abs() <= 4.0 * se,
        "mean {mean} target {target} se {se}"
    );
}

#[test]
fn sample_plans_are_monotone() {
    let base = plan_samples(1e-2, 1e-2, 1.0, None).unwrap();
    let tighter_delta = plan_samples(5e-3, 1e-2, 1.0, None).unwrap();
    let tighter_eps = plan_samples(1e-2, 1e-3, 1.0, None).unwrap();
    let bigger_var = plan_samples(1e-2, 1e-2, 2.0, None).unwrap();
    let correlated = plan_samples(1e-2, 1e-2, 1.0, Some(0.5)).unwrap();
    assert!(tighter_delta.n_required > base.n_required);
    assert!(tighter_eps.n_required > base.n_required);
    assert!(bigger_var.n_required > base.n_required);
    assert!(correlated.n_required > base.n_required);
    assert!(base.n_clt_heuristic <= base.n_required);
}
