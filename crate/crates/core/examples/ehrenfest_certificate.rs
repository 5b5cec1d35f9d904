//! End-to-end certificate pipeline on the Ehrenfest urn: fit a drift,
//! accelerate it, extract a minorization, and print the explicit
//! convergence constants.

use mcmclab_core::lyapunov;
use mcmclab_core::markov;
use mcmclab_core::models;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 16;
    let p = models::ehrenfest_matrix(n)?;
    let report = markov::classify(&p);
    println!(
        "classes {} irreducible {} periods {:?}",
        report.classes.len(),
        report.irreducible,
        report.periods
    );

    let v: Vec<f64> = (0..=n).map(|x| (x as f64 - n as f64 / 2.0).powi(2)).collect();
    let drift = lyapunov::fit_geometric_drift(&p, &v, lyapunov::DEFAULT_PIVOT_QUANTILE)?;
    println!("drift c {} d {}", drift.c, drift.d);

    let t = 8;
    let accelerated = lyapunov::accelerate_drift(&p, &drift, t)?;
    let pt = p.power(t)?;
    println!("accelerated c {} d {}", accelerated.c, accelerated.d);

    let sub = markov::classify(&pt);
    println!("power classes {}", sub.classes.len());
    let anchor = v
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let class: Vec<usize> = sub
        .classes
        .iter()
        .find(|c| c.contains(&anchor))
        .cloned()
        .unwrap();
    let restricted = pt.restrict(&class)?;
    let v_r: Vec<f64> = class.iter().map(|&i| v[i]).collect();
    let cert_r = lyapunov::DriftCertificate::geometric_checked(&restricted, &v_r, accelerated.c, accelerated.d)?;

    let r = 2.0 * cert_r.d / cert_r.c * 1.5;
    let minor = lyapunov::find_minorization(&restricted, &v_r, r)?;
    println!("alpha {}", minor.alpha);

    let cert = lyapunov::hairer_mattingly_constants(&cert_r, &minor, None, None)?;
    println!(
        "beta {} gamma_bar {} M {}",
        cert.beta, cert.gamma_bar, cert.m_bound
    );
    assert!(cert.gamma_bar < 1.0);
    Ok(())
}
