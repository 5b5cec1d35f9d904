//! Shared fixtures for the benchmark suite.

use mcmclab_core::lyapunov::{
    accelerate_drift, find_minorization, fit_geometric_drift, hairer_mattingly_constants,
    ConvergenceCertificate, DriftCertificate, DEFAULT_PIVOT_QUANTILE,
};
use mcmclab_core::markov::{classify, StochasticMatrix};
use mcmclab_core::models::{magnetization_chain, IsingModel};
use mcmclab_core::sampler::{ising_state_space, metropolis_matrix, AcceptanceRule};

/// Metropolis matrix over all 256 configurations of an 8-spin circle.
pub fn ising_256() -> StochasticMatrix {
    let model = IsingModel::new(8, 0.5, 0.5, None).expect("valid model");
    let (energies, edges) = ising_state_space(&model);
    let rule = AcceptanceRule::metropolis(model.q);
    metropolis_matrix(&energies, &edges, 0.5, &rule).expect("valid chain")
}

/// The 8-step magnetization kernel on its even parity class, with a
/// verified convergence certificate.
pub fn certified_magnetization_chain() -> (StochasticMatrix, ConvergenceCertificate) {
    let n = 16usize;
    let p = magnetization_chain(n).expect("valid chain");
    let v: Vec<f64> = (0..=n)
        .map(|i| {
            let m = (2 * i) as f64 - n as f64;
            m * m
        })
        .collect();
    let fitted = fit_geometric_drift(&p, &v, DEFAULT_PIVOT_QUANTILE).expect("drift fits");
    let accel = accelerate_drift(&p, &fitted, 8).expect("acceleration holds");
    let p8 = p.power(8).expect("power exists");
    let class = classify(&p8)
        .classes
        .iter()
        .find(|c| c.binary_search(&(n / 2)).is_ok())
        .expect("anchor class exists")
        .clone();
    let p_red = p8.restrict(&class).expect("restriction is stochastic");
    let v_red: Vec<f64> = class.iter().map(|&i| v[i]).collect();
    let drift =
        DriftCertificate::geometric_checked(&p_red, &v_red, accel.c, accel.d).expect("drift holds");
    let minor = find_minorization(&p_red, &v_red, 64.0).expect("small set exists");
    let cert = hairer_mattingly_constants(&drift, &minor, None, None).expect("constants exist");
    (p_red, cert)
}
