//! Cross-cutting structural identities: renewal decomposition, coupling
//! tails against exact convergence, and hitting-time consistency.

use mcmclab_core::markov::{
    self, coupling_diagonal_time, first_passage_law, StochasticMatrix,
};
use mcmclab_core::models;
use mcmclab_core::rng::RngStream;

fn two_state() -> StochasticMatrix {
    StochasticMatrix::from_rows(
        &[vec![1.0 / 3.0, 2.0 / 3.0], vec![2.0 / 3.0, 1.0 / 3.0]],
        1e-12,
    )
    .unwrap()
}

/// p^n(x, y) = sum_{k=1..n} f_k(x, y) p^{n-k}(y, y) for every pair and
/// every horizon: the first-visit decomposition of the n-step kernel.
fn check_renewal(p: &StochasticMatrix, n_max: usize, tol: f64, label: &str) {
    let n = p.n();
    let mut powers = Vec::with_capacity(n_max + 1);
    powers.push(StochasticMatrix::identity(n));
    for k in 1..=n_max {
        powers.push(powers[k - 1].multiply(p).unwrap());
    }
    for x in 0..n {
        for y in 0..n {
            let law = first_passage_law(p, x, &[y], n_max).unwrap();
            for step in 1..=n_max {
                let mut total = 0.0;
                for k in 1..=step {
                    total += law.probabilities[k - 1] * powers[step - k].get(y, y);
                }
                let direct = powers[step].get(x, y);
                assert!(
                    (total - direct).abs() <= tol,
                    "{label}: x={x} y={y} n={step}: renewal {total} direct {direct}"
                );
            }
        }
    }
}

#[test]
fn renewal_identity_on_small_chains() {
    check_renewal(&two_state(), 50, 1e-10, "two-state");
    check_renewal(&models::ehrenfest_matrix(8).unwrap(), 50, 1e-10, "urn-8");
    check_renewal(
        &models::ehrenfest_matrix(15).unwrap(),
        50,
        1e-10,
        "urn-15",
    );
    check_renewal(
        &models::magnetization_chain(14).unwrap(),
        50,
        1e-10,
        "magnetization-14",
    );
    check_renewal(&models::cycle_walk(5, 0.5).unwrap(), 50, 1e-10, "cycle-5");
    check_renewal(&models::cycle_walk(8, 0.7).unwrap(), 50, 1e-10, "cycle-8");
    check_renewal(
        &models::droplet_chain(6, 1.0, 0.5, 1.0 / 6.0).unwrap(),
        50,
        1e-10,
        "droplet-6",
    );
}

#[test]
fn coupling_tail_dominates_exact_convergence() {
    let p = two_state();
    let nu = vec![1.0, 0.0];
    let pi = vec![0.5, 0.5];
    let base = RngStream::new(99, 0);
    let report = coupling_diagonal_time(&p, &nu, &pi, 10, 100_000, &base).unwrap();
    for n in 1..=10usize {
        let exact = 3f64.powi(-(n as i32));
        let bound = 2.0 * report.tail[n] + 3.0 * 2.0 * report.std_err[n];
        assert!(
            exact <= bound,
            "n={n}: exact {exact} exceeds coupled bound {bound}"
        );
    }
}

#[test]
fn droplet_hitting_times_match_linear_solver() {
    // Absorption closed forms against the generic hitting-time solver on
    // an independent construction of the same chain.
    for n in [6usize, 12] {
        let beta = 1.0;
        let h = 0.5;
        let q = 1.0 / n as f64;
        let p = models::droplet_chain(n, beta, h, q).unwrap();
        let times = markov::mean_hitting_times(&p, &[n]).unwrap();
        let e2 = n as f64 * (n as f64 - 2.0) / 2.0;
        assert!((times[2] - e2).abs() / e2 < 1e-9, "n={n}: {e2} vs {}", times[2]);
        let e0 = 1.5 * (beta * (4.0 - 2.0 * h)).exp() + 1.0 / (2.0 * q) + e2;
        assert!((times[0] - e0).abs() / e0 < 1e-9, "n={n}: {e0} vs {}", times[0]);
    }
}

#[test]
fn ehrenfest_return_time_is_two_to_the_n() {
    let p = models::ehrenfest_matrix(10).unwrap();
    let ret = markov::mean_return_time(&p, 10).unwrap();
    assert!((ret - 1024.0).abs() / 1024.0 < 1e-6, "{ret}");
}

#[test]
fn first_passage_law_sums_to_absorption_probability() {
    let p = models::droplet_chain(8, 0.8, 0.4, 0.125).unwrap();
    let law = first_passage_law(&p, 0, &[8], 4000).unwrap();
    let total: f64 = law.probabilities.iter().sum();
    assert!((total - 1.0).abs() < 1e-6, "mass {total}");
    let mean: f64 = law
        .probabilities
        .iter()
        .enumerate()
        .map(|(k, &f)| (k + 1) as f64 * f)
        .sum();
    let solver = markov::mean_hitting_times(&p, &[8]).unwrap();
    assert!((mean - solver[0]).abs() < 1e-3, "{mean} vs {}", solver[0]);
}
