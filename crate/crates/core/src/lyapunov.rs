//! Lyapunov drift analysis and geometric-ergodicity certificates.
//!
//! The generator of a transition matrix `P` is `L = P - I`. A geometric
//! drift inequality `L V <= -c V + d` together with a minorization of the
//! kernel on the sublevel set `K = {V < R}` yields an explicit contraction
//! factor `gamma_bar < 1` and prefactor for the weighted total-variation
//! distance, following the Hairer-Mattingly weighted-contraction argument.
//! Everything here is checked: certificates re-verify their defining
//! inequalities at every state, and sampled audits confirm the contraction
//! factor on random measure pairs.

use crate::markov::{self, StochasticMatrix};
use crate::rng::RngStream;
use crate::{Error, Result};

/// Pointwise slack allowed when re-verifying certificate inequalities.
pub const CERT_TOL: f64 = 1e-9;

/// Floor applied to the drift offset `d` so that `beta = alpha0 / d` stays
/// finite.
pub const D_FLOOR: f64 = 1e-12;

/// Default quantile of smallest-V states used to fit the offset `d`.
pub const DEFAULT_PIVOT_QUANTILE: f64 = 0.05;

/// Applies the generator: `(L f)(x) = (P f)(x) - f(x)`.
///
/// # Examples
///
/// ```
/// use mcmclab_core::lyapunov::generator_apply;
/// use mcmclab_core::markov::StochasticMatrix;
/// let p = StochasticMatrix::from_rows(
///     &[vec![1.0 / 3.0, 2.0 / 3.0], vec![2.0 / 3.0, 1.0 / 3.0]],
///     1e-9,
/// )
/// .unwrap();
/// let lv = generator_apply(&p, &[0.0, 1.0]).unwrap();
/// assert!((lv[0] - 2.0 / 3.0).abs() < 1e-15);
/// assert!((lv[1] + 2.0 / 3.0).abs() < 1e-15);
/// ```
pub fn generator_apply(p: &StochasticMatrix, f: &[f64]) -> Result<Vec<f64>> {
    let pf = markov::apply_to_function(p, f, 1)?;
    Ok(pf.iter().zip(f).map(|(a, b)| a - b).collect())
}

/// Both sides of the discrete Dynkin identity after `n` steps from `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct DynkinAudit {
    /// `E_x[f(X_n)]`.
    pub lhs: f64,
    /// `f(x) + sum_{m<n} E_x[(L f)(X_m)]`.
    pub rhs: f64,
    /// Absolute difference.
    pub gap: f64,
}

/// Verifies the Dynkin identity `E_x[f(X_n)] = f(x) + sum_{m<n}
/// E_x[(Lf)(X_m)]` numerically.
pub fn dynkin_audit(p: &StochasticMatrix, f: &[f64], x: usize, n: u64) -> Result<DynkinAudit> {
    let dim = p.n();
    if x >= dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: x,
        });
    }
    let lf = generator_apply(p, f)?;
    let mut sum = 0.0;
    let mut iter_lf = lf.clone();
    // Accumulate (P^m L f)(x) for m = 0..n.
    for m in 0..n {
        if m > 0 {
            iter_lf = markov::apply_to_function(p, &iter_lf, 1)?;
        }
        sum += iter_lf[x];
    }
    let pnf = markov::apply_to_function(p, f, n)?;
    let lhs = pnf[x];
    let rhs = f[x] + sum;
    Ok(DynkinAudit {
        lhs,
        rhs,
        gap: (lhs - rhs).abs(),
    })
}

/// The inequality shape a drift certificate asserts.
#[derive(Debug, Clone, PartialEq)]
pub enum DriftKind {
    /// `L V <= -c V + d` with `c > 0`: geometric decay toward a sublevel
    /// set.
    Geometric,
    /// `L V <= c V + d` with `c >= 0`: at most sub-exponential growth.
    Bounded,
    /// `L V <= -c f + d 1_K`: decay measured by `f` outside the set `K`.
    Setwise {
        /// The decay observable.
        f: Vec<f64>,
        /// States of the exceptional set `K`.
        k_set: Vec<usize>,
    },
}

/// A verified drift inequality for a Lyapunov function `V >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftCertificate {
    /// The Lyapunov function.
    pub v: Vec<f64>,
    /// Rate constant.
    pub c: f64,
    /// Offset constant.
    pub d: f64,
    /// Which inequality the certificate asserts.
    pub kind: DriftKind,
}

fn check_v(v: &[f64], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: v.len(),
        });
    }
    for &value in v {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::ParameterOutOfRange(
                "Lyapunov function must be finite and nonnegative".into(),
            ));
        }
    }
    Ok(())
}

impl DriftCertificate {
    /// Verifies `L V <= -c V + d` at every state and wraps it as a
    /// certificate.
    pub fn geometric_checked(
        p: &StochasticMatrix,
        v: &[f64],
        c: f64,
        d: f64,
    ) -> Result<DriftCertificate> {
        check_v(v, p.n())?;
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::ParameterOutOfRange(
                "geometric drift needs c > 0".into(),
            ));
        }
        if !(d >= 0.0) || !d.is_finite() {
            return Err(Error::ParameterOutOfRange(
                "geometric drift needs d >= 0".into(),
            ));
        }
        let lv = generator_apply(p, v)?;
        for (x, &r) in lv.iter().enumerate() {
            if r > -c * v[x] + d + CERT_TOL {
                return Err(Error::CertificateInvalid(format!(
                    "drift fails at state {x}: LV = {r}, -cV + d = {}",
                    -c * v[x] + d
                )));
            }
        }
        Ok(DriftCertificate {
            v: v.to_vec(),
            c,
            d,
            kind: DriftKind::Geometric,
        })
    }

    /// Verifies `L V <= c V + d` at every state and wraps it as a
    /// certificate.
    pub fn bounded_checked(
        p: &StochasticMatrix,
        v: &[f64],
        c: f64,
        d: f64,
    ) -> Result<DriftCertificate> {
        check_v(v, p.n())?;
        if !(c >= 0.0) || !c.is_finite() || !(d >= 0.0) || !d.is_finite() {
            return Err(Error::ParameterOutOfRange(
                "bounded drift needs c >= 0 and d >= 0".into(),
            ));
        }
        let lv = generator_apply(p, v)?;
        for (x, &r) in lv.iter().enumerate() {
            if r > c * v[x] + d + CERT_TOL {
                return Err(Error::CertificateInvalid(format!(
                    "bounded drift fails at state {x}: LV = {r}, cV + d = {}",
                    c * v[x] + d
                )));
            }
        }
        Ok(DriftCertificate {
            v: v.to_vec(),
            c,
            d,
            kind: DriftKind::Bounded,
        })
    }

    /// Verifies `L V <= -c f + d 1_K` at every state and wraps it as a
    /// certificate.
    pub fn setwise_checked(
        p: &StochasticMatrix,
        v: &[f64],
        f: &[f64],
        k_set: &[usize],
        c: f64,
        d: f64,
    ) -> Result<DriftCertificate> {
        let n = p.n();
        check_v(v, n)?;
        if f.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: f.len(),
            });
        }
        let mut in_k = vec![false; n];
        for &x in k_set {
            if x >= n {
                return Err(Error::DimensionMismatch { expected: n, got: x });
            }
            in_k[x] = true;
        }
        let lv = generator_apply(p, v)?;
        for (x, &r) in lv.iter().enumerate() {
            let rhs = -c * f[x] + if in_k[x] { d } else { 0.0 };
            if r > rhs + CERT_TOL {
                return Err(Error::CertificateInvalid(format!(
                    "setwise drift fails at state {x}: LV = {r}, bound = {rhs}"
                )));
            }
        }
        let mut k_sorted = k_set.to_vec();
        k_sorted.sort_unstable();
        k_sorted.dedup();
        Ok(DriftCertificate {
            v: v.to_vec(),
            c,
            d,
            kind: DriftKind::Setwise {
                f: f.to_vec(),
                k_set: k_sorted,
            },
        })
    }
}

/// Upper bound `(1+c)^n V(x) + ((1+c)^n - 1) d / c` on `E_x[V(X_n)]` from a
/// bounded drift certificate (with the `c -> 0` limit `V(x) + n d`).
pub fn subexponential_bound(cert: &DriftCertificate, x: usize, n: u64) -> Result<f64> {
    if cert.kind != DriftKind::Bounded {
        return Err(Error::CertificateInvalid(
            "subexponential bound needs a bounded-kind certificate".into(),
        ));
    }
    if x >= cert.v.len() {
        return Err(Error::DimensionMismatch {
            expected: cert.v.len(),
            got: x,
        });
    }
    let growth = (1.0 + cert.c).powi(n as i32);
    if cert.c == 0.0 {
        Ok(cert.v[x] + n as f64 * cert.d)
    } else {
        Ok(growth * cert.v[x] + (growth - 1.0) * cert.d / cert.c)
    }
}

/// Pivot states: the `ceil(quantile * n)` states of smallest `V` (ties by
/// index).
fn pivot_states(v: &[f64], quantile: f64) -> Vec<usize> {
    let n = v.len();
    let count = ((quantile * n as f64).ceil() as usize).clamp(1, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]).then(a.cmp(&b)));
    order.truncate(count);
    order
}

/// Fits the tightest geometric drift `L V <= -c V + d` for a given `V`.
///
/// The offset `d` is the largest generator value over the pivot set (the
/// `pivot_quantile` fraction of states with smallest `V`), floored at
/// [`D_FLOOR`]; the rate is then `c = min (d - LV) / V` over states with
/// `V > 0`. Fails with [`Error::NoValidDrift`] when no positive rate
/// exists.
pub fn fit_geometric_drift(
    p: &StochasticMatrix,
    v: &[f64],
    pivot_quantile: f64,
) -> Result<DriftCertificate> {
    let n = p.n();
    check_v(v, n)?;
    if !(0.0..=1.0).contains(&pivot_quantile) {
        return Err(Error::ParameterOutOfRange(
            "pivot quantile must lie in [0, 1]".into(),
        ));
    }
    let lv = generator_apply(p, v)?;
    let pivot = pivot_states(v, pivot_quantile);
    let d_raw = pivot.iter().map(|&x| lv[x]).fold(0.0f64, f64::max);
    let d = d_raw.max(D_FLOOR);
    let mut c = f64::INFINITY;
    let mut any_positive_v = false;
    for x in 0..n {
        if v[x] > 0.0 {
            any_positive_v = true;
            c = c.min((d - lv[x]) / v[x]);
        }
    }
    if !any_positive_v {
        return Err(Error::NoValidDrift { c: 0.0 });
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::NoValidDrift { c });
    }
    for (x, &r) in lv.iter().enumerate() {
        if r > -c * v[x] + d + CERT_TOL {
            return Err(Error::NoValidDrift { c });
        }
    }
    Ok(DriftCertificate {
        v: v.to_vec(),
        c,
        d,
        kind: DriftKind::Geometric,
    })
}

/// Fits the tightest bounded drift `L V <= c V + d` for a given `V`.
pub fn fit_bounded_drift(
    p: &StochasticMatrix,
    v: &[f64],
    pivot_quantile: f64,
) -> Result<DriftCertificate> {
    let n = p.n();
    check_v(v, n)?;
    if !(0.0..=1.0).contains(&pivot_quantile) {
        return Err(Error::ParameterOutOfRange(
            "pivot quantile must lie in [0, 1]".into(),
        ));
    }
    let lv = generator_apply(p, v)?;
    let pivot = pivot_states(v, pivot_quantile);
    let d = pivot
        .iter()
        .map(|&x| lv[x])
        .fold(0.0f64, f64::max)
        .max(D_FLOOR);
    let mut c = 0.0f64;
    for x in 0..n {
        if v[x] > 0.0 {
            c = c.max((lv[x] - d) / v[x]);
        }
    }
    c = c.max(0.0);
    for (x, &r) in lv.iter().enumerate() {
        if r > c * v[x] + d + CERT_TOL {
            return Err(Error::NoValidDrift { c });
        }
    }
    Ok(DriftCertificate {
        v: v.to_vec(),
        c,
        d,
        kind: DriftKind::Bounded,
    })
}

/// Transfers a geometric drift certificate for `P` to the `t`-step chain
/// `P^t`: the rate becomes `c_t = 1 - (1-c)^t` and the offset
/// `d_t = c_t d / c`, re-verified against the generator of `P^t`.
pub fn accelerate_drift(
    p: &StochasticMatrix,
    cert: &DriftCertificate,
    t: u64,
) -> Result<DriftCertificate> {
    if cert.kind != DriftKind::Geometric {
        return Err(Error::CertificateInvalid(
            "acceleration needs a geometric-kind certificate".into(),
        ));
    }
    if t == 0 {
        return Err(Error::ParameterOutOfRange(
            "step count T must be positive".into(),
        ));
    }
    let gamma = 1.0 - cert.c;
    let c_t = 1.0 - gamma.powi(t as i32);
    let d_t = c_t * cert.d / cert.c;
    let pt = p.power(t)?;
    DriftCertificate::geometric_checked(&pt, &cert.v, c_t, d_t)
}

/// A verified minorization of the kernel on a sublevel set: `p(x, y) >=
/// alpha nu(y)` for every `x` in `K = {V < R}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinorizationCertificate {
    /// Sublevel radius defining `K`.
    pub r: f64,
    /// States of `K`, sorted.
    pub k_indices: Vec<usize>,
    /// Minorization mass in `(0, 1]`.
    pub alpha: f64,
    /// The minorizing probability law.
    pub nu: Vec<f64>,
}

/// Extracts the largest uniform minorization of the rows over `K = {V < R}`:
/// `nu~(y) = min_{x in K} p(x, y)`, `alpha = sum nu~`.
///
/// Fails with [`Error::EmptyK`] when the sublevel set is empty and
/// [`Error::AlphaZero`] when the rows share no common support (the typical
/// cure is to pass a higher power of the chain).
pub fn find_minorization(
    p: &StochasticMatrix,
    v: &[f64],
    r: f64,
) -> Result<MinorizationCertificate> {
    let n = p.n();
    check_v(v, n)?;
    let k_indices: Vec<usize> = (0..n).filter(|&x| v[x] < r).collect();
    if k_indices.is_empty() {
        return Err(Error::EmptyK { r });
    }
    let mut nu_tilde = vec![f64::INFINITY; n];
    for &x in &k_indices {
        for (y, slot) in nu_tilde.iter_mut().enumerate() {
            *slot = slot.min(p.get(x, y));
        }
    }
    let alpha: f64 = nu_tilde.iter().sum();
    if alpha <= 0.0 {
        return Err(Error::AlphaZero);
    }
    let alpha = alpha.min(1.0);
    let nu: Vec<f64> = nu_tilde.iter().map(|&m| m / alpha).collect();
    Ok(MinorizationCertificate {
        r,
        k_indices,
        alpha,
        nu,
    })
}

/// Explicit contraction constants assembled from a drift and a minorization
/// certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceCertificate {
    /// Lyapunov function shared by the underlying certificates.
    pub v: Vec<f64>,
    /// Drift rate.
    pub c: f64,
    /// Drift offset.
    pub d: f64,
    /// Sublevel radius.
    pub r: f64,
    /// Minorization mass.
    pub alpha: f64,
    /// Minorizing law.
    pub nu: Vec<f64>,
    /// States of the small set.
    pub k_indices: Vec<usize>,
    /// Mass parameter `alpha0` in `(0, alpha)`.
    pub alpha0: f64,
    /// Level parameter `gamma0` in `(gamma + 2d/R, 1)`.
    pub gamma0: f64,
    /// Weight scale `beta = alpha0 / d`.
    pub beta: f64,
    /// Contraction factor of the weighted distance, `< 1`.
    pub gamma_bar: f64,
    /// Prefactor bound `max{1 + gamma, 2 + beta d} / (1 - gamma_bar)`.
    pub m_bound: f64,
}

/// The explicit constants of the weighted-contraction theorem, with the
/// parameters that produced them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionConstants {
    /// Mass parameter in `(0, alpha)`.
    pub alpha0: f64,
    /// Level parameter in `(gamma + 2d/R, 1)`.
    pub gamma0: f64,
    /// Weight scale `beta = alpha0 / d`.
    pub beta: f64,
    /// Contraction factor, `< 1`.
    pub gamma_bar: f64,
    /// Prefactor bound.
    pub m_bound: f64,
}

/// Core constants computation shared by the finite-state and continuous
/// pipelines.
///
/// With `gamma = 1 - c` (clamped at 0), admissible parameters satisfy
/// `0 < alpha0 < alpha` and `gamma + 2d/R < gamma0 < 1`; defaults are
/// `alpha0 = alpha / 2` and the midpoint of the `gamma0` window. Then
/// `beta = alpha0 / d`,
/// `gamma_bar = max{1 - (alpha - alpha0), (2 + R beta gamma0) / (2 + R beta)}`,
/// and the prefactor is `max{1 + gamma, 2 + beta d} / (1 - gamma_bar)`.
pub fn contraction_constants(
    c: f64,
    d: f64,
    r: f64,
    alpha: f64,
    alpha0: Option<f64>,
    gamma0: Option<f64>,
) -> Result<ContractionConstants> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::ParameterOutOfRange(
            "drift rate c must be positive".into(),
        ));
    }
    if !(alpha > 0.0) {
        return Err(Error::AlphaZero);
    }
    let gamma = (1.0 - c).max(0.0);
    let d = d.max(D_FLOOR);
    let alpha = alpha.min(1.0);
    if !(r > 2.0 * d / c) {
        return Err(Error::ParameterOutOfRange(format!(
            "R must exceed 2d/c = {}; got R = {r}",
            2.0 * d / c
        )));
    }
    let floor = gamma + 2.0 * d / r;
    if !(floor < 1.0) {
        return Err(Error::ParameterOutOfRange(format!(
            "gamma + 2d/R = {floor} must be below 1"
        )));
    }
    let alpha0 = alpha0.unwrap_or(alpha / 2.0);
    if !(alpha0 > 0.0 && alpha0 < alpha) {
        return Err(Error::ParameterOutOfRange(format!(
            "alpha0 must lie in (0, alpha) = (0, {alpha}); got {alpha0}"
        )));
    }
    let gamma0 = gamma0.unwrap_or(0.5 * (floor + 1.0));
    if !(gamma0 > floor && gamma0 < 1.0) {
        return Err(Error::ParameterOutOfRange(format!(
            "gamma0 must lie in (gamma + 2d/R, 1) = ({floor}, 1); got {gamma0}"
        )));
    }
    let beta = alpha0 / d;
    let branch1 = 1.0 - (alpha - alpha0);
    let branch2 = (2.0 + r * beta * gamma0) / (2.0 + r * beta);
    let gamma_bar = branch1.max(branch2);
    let m_bound = (1.0 + gamma).max(2.0 + beta * d) / (1.0 - gamma_bar);
    Ok(ContractionConstants {
        alpha0,
        gamma0,
        beta,
        gamma_bar,
        m_bound,
    })
}

/// Combines a geometric drift certificate and a minorization certificate
/// into explicit contraction constants; see [`contraction_constants`] for
/// the formulas and parameter windows.
pub fn hairer_mattingly_constants(
    drift: &DriftCertificate,
    minor: &MinorizationCertificate,
    alpha0: Option<f64>,
    gamma0: Option<f64>,
) -> Result<ConvergenceCertificate> {
    if drift.kind != DriftKind::Geometric {
        return Err(Error::CertificateInvalid(
            "contraction constants need a geometric-kind certificate".into(),
        ));
    }
    if drift.v.len() != minor.nu.len() {
        return Err(Error::DimensionMismatch {
            expected: drift.v.len(),
            got: minor.nu.len(),
        });
    }
    let constants = contraction_constants(
        drift.c,
        drift.d,
        minor.r,
        minor.alpha,
        alpha0,
        gamma0,
    )?;
    Ok(ConvergenceCertificate {
        v: drift.v.clone(),
        c: drift.c,
        d: drift.d,
        r: minor.r,
        alpha: minor.alpha.min(1.0),
        nu: minor.nu.clone(),
        k_indices: minor.k_indices.clone(),
        alpha0: constants.alpha0,
        gamma0: constants.gamma0,
        beta: constants.beta,
        gamma_bar: constants.gamma_bar,
        m_bound: constants.m_bound,
    })
}

/// Weighted sup norm `|f|_{1+V} = max |f(x)| / (1 + V(x))`.
///
/// # Examples
///
/// ```
/// use mcmclab_core::lyapunov::weighted_norm;
/// assert_eq!(weighted_norm(&[2.0, 6.0], &[0.0, 2.0]), 2.0);
/// ```
pub fn weighted_norm(f: &[f64], v: &[f64]) -> f64 {
    assert_eq!(f.len(), v.len(), "weighted_norm needs equal lengths");
    f.iter()
        .zip(v)
        .map(|(&fx, &vx)| fx.abs() / (1.0 + vx))
        .fold(0.0f64, f64::max)
}

/// Weighted distance `rho_beta(mu, nu) = sum |mu - nu| (1 + beta V)`;
/// `beta = 0` recovers the L1 distance.
pub fn weighted_distance(mu: &[f64], nu: &[f64], v: &[f64], beta: f64) -> f64 {
    assert_eq!(mu.len(), nu.len(), "weighted_distance needs equal lengths");
    assert_eq!(mu.len(), v.len(), "weighted_distance needs equal lengths");
    mu.iter()
        .zip(nu)
        .zip(v)
        .map(|((&mx, &nx), &vx)| (mx - nx).abs() * (1.0 + beta * vx))
        .sum()
}

/// Result of a sampled contraction audit.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    /// Largest contraction ratio observed.
    pub max_ratio: f64,
    /// Number of measure pairs actually tested.
    pub pairs_tested: usize,
}

/// Samples random measure pairs and checks that one kernel step contracts
/// the weighted distance by at least `gamma_bar`.
///
/// Pairs whose initial distance is negligible are skipped. Any ratio above
/// `gamma_bar + 1e-9` fails the audit with [`Error::CertificateInvalid`].
pub fn contraction_audit(
    p: &StochasticMatrix,
    cert: &ConvergenceCertificate,
    pairs: usize,
    rng: &mut RngStream,
) -> Result<AuditReport> {
    let n = p.n();
    if cert.v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: cert.v.len(),
        });
    }
    let mut max_ratio: f64 = 0.0;
    let mut tested = 0usize;
    let draw_measure = |rng: &mut RngStream| -> Vec<f64> {
        // Exponential spacings give a uniform draw from the simplex.
        let mut m: Vec<f64> = (0..n).map(|_| -(1.0 - rng.next_f64()).ln()).collect();
        let total: f64 = m.iter().sum();
        for e in m.iter_mut() {
            *e /= total;
        }
        m
    };
    for _ in 0..pairs {
        let mu = draw_measure(rng);
        let nu = draw_measure(rng);
        let before = weighted_distance(&mu, &nu, &cert.v, cert.beta);
        if before < 1e-12 {
            continue;
        }
        let mu1 = markov::evolve_measure(&mu, p, 1)?;
        let nu1 = markov::evolve_measure(&nu, p, 1)?;
        let after = weighted_distance(&mu1, &nu1, &cert.v, cert.beta);
        let ratio = after / before;
        if ratio > cert.gamma_bar + CERT_TOL {
            return Err(Error::CertificateInvalid(format!(
                "contraction ratio {ratio} exceeds gamma_bar = {}",
                cert.gamma_bar
            )));
        }
        max_ratio = max_ratio.max(ratio);
        tested += 1;
    }
    Ok(AuditReport {
        max_ratio,
        pairs_tested: tested,
    })
}

/// One point of the certified convergence bound next to the exact deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundPoint {
    /// Steps taken.
    pub n: u64,
    /// Certified bound `(1 + V(x)) M gamma_bar^n |f - pi(f)|_{1+V}`.
    pub bound: f64,
    /// Exact `|E_x[f(X_n)] - pi(f)|`.
    pub exact: f64,
}

/// Evaluates the certified convergence bound and the exact deviation for
/// all step counts `0..=n_max`.
pub fn convergence_bound(
    p: &StochasticMatrix,
    cert: &ConvergenceCertificate,
    x: usize,
    f: &[f64],
    n_max: u64,
) -> Result<Vec<BoundPoint>> {
    let n = p.n();
    if x >= n {
        return Err(Error::DimensionMismatch { expected: n, got: x });
    }
    if f.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: f.len(),
        });
    }
    if cert.v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: cert.v.len(),
        });
    }
    let pi = markov::invariant_distribution(p)?;
    let pi_f: f64 = pi.iter().zip(f).map(|(a, b)| a * b).sum();
    let centered: Vec<f64> = f.iter().map(|&fx| fx - pi_f).collect();
    let fnorm = weighted_norm(&centered, &cert.v);
    let prefactor = (1.0 + cert.v[x]) * cert.m_bound * fnorm;
    let mut points = Vec::with_capacity(n_max as usize + 1);
    let mut iterate = f.to_vec();
    let mut decay = 1.0f64;
    for step in 0..=n_max {
        if step > 0 {
            iterate = markov::apply_to_function(p, &iterate, 1)?;
            decay *= cert.gamma_bar;
        }
        points.push(BoundPoint {
            n: step,
            bound: prefactor * decay,
            exact: (iterate[x] - pi_f).abs(),
        });
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state() -> StochasticMatrix {
        StochasticMatrix::from_rows(
            &[vec![1.0 / 3.0, 2.0 / 3.0], vec![2.0 / 3.0, 1.0 / 3.0]],
            1e-9,
        )
        .unwrap()
    }

    #[test]
    fn generator_kills_constants() {
        let p = two_state();
        let lv = generator_apply(&p, &[5.0, 5.0]).unwrap();
        assert!(lv.iter().all(|&x| x.abs() < 1e-15));
    }

    #[test]
    fn dynkin_identity_small_chain() {
        let p = two_state();
        for n in [0u64, 1, 3, 10] {
            let audit = dynkin_audit(&p, &[0.3, -1.7], 0, n).unwrap();
            assert!(audit.gap <= 1e-9, "n = {n}: gap {}", audit.gap);
        }
    }

    #[test]
    fn accelerate_drift_closed_form() {
        // A chain engineered so that V = (0, 1) has LV = -0.75 V + offsets
        // below d = 1 everywhere; the certificate survives acceleration.
        let p = StochasticMatrix::from_rows(&[vec![0.5, 0.5], vec![0.75, 0.25]], 1e-9).unwrap();
        let cert = DriftCertificate::geometric_checked(&p, &[0.0, 1.0], 0.75, 1.0).unwrap();
        let acc = accelerate_drift(&p, &cert, 2).unwrap();
        assert!((acc.c - 0.9375).abs() < 1e-12);
        assert!((acc.d - 1.25).abs() < 1e-12);
    }

    #[test]
    fn subexponential_bound_matches_hand_value() {
        let p = StochasticMatrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]], 1e-9).unwrap();
        let cert = DriftCertificate::bounded_checked(&p, &[0.0, 1.0], 0.5, 0.5).unwrap();
        // (1 + c)^2 V + ((1+c)^2 - 1) d / c with V = 1.
        let b = subexponential_bound(&cert, 1, 2).unwrap();
        assert!((b - (2.25 + 1.25 * 0.5 / 0.5 * 1.0)).abs() < 1e-12);
    }

    #[test]
    fn fit_rejects_function_without_drift() {
        // State 1 climbs to state 2, so LV > 0 where V > 0: no positive
        // rate c can hold outside the pivot and the fit must refuse.
        let p = StochasticMatrix::from_rows(
            &[
                vec![1.0, 0.0, 0.0],
                vec![0.0, 0.0, 1.0],
                vec![0.0, 0.0, 1.0],
            ],
            1e-9,
        )
        .unwrap();
        let err = fit_geometric_drift(&p, &[0.0, 1.0, 2.0], 0.05).unwrap_err();
        assert!(matches!(err, Error::NoValidDrift { .. }));
    }

    #[test]
    fn weighted_norm_example() {
        assert_eq!(weighted_norm(&[2.0, 6.0], &[0.0, 2.0]), 2.0);
    }

    #[test]
    fn weighted_distance_recovers_l1_at_beta_zero() {
        let mu = [0.7, 0.3];
        let nu = [0.2, 0.8];
        let v = [0.0, 5.0];
        assert!((weighted_distance(&mu, &nu, &v, 0.0) - 1.0).abs() < 1e-15);
        assert!((weighted_distance(&mu, &nu, &v, 1.0) - (0.5 + 0.5 * 6.0)).abs() < 1e-15);
    }

    #[test]
    fn minorization_of_strictly_positive_chain() {
        let p = two_state();
        let minor = find_minorization(&p, &[0.0, 0.0], 1.0).unwrap();
        assert_eq!(minor.k_indices, vec![0, 1]);
        // Both rows are (1/3, 2/3) up to swap; the entrywise min is 1/3 each.
        assert!((minor.alpha - 2.0 / 3.0).abs() < 1e-12);
        for (x, &k) in minor.k_indices.iter().enumerate() {
            for y in 0..2 {
                assert!(p.get(k, y) >= minor.alpha * minor.nu[y] - 1e-12, "{x} {y}");
            }
        }
    }

    #[test]
    fn minorization_reports_disjoint_rows() {
        let p =
            StochasticMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]], 1e-9).unwrap();
        assert!(matches!(
            find_minorization(&p, &[0.0, 0.0], 1.0),
            Err(Error::AlphaZero)
        ));
    }

    #[test]
    fn hairer_mattingly_pipeline_contracts() {
        let p = two_state();
        let drift = fit_geometric_drift(&p, &[0.0, 1.0], 0.5).unwrap();
        let minor = find_minorization(&p, &drift.v, 1.5).unwrap();
        let cert = hairer_mattingly_constants(&drift, &minor, None, None).unwrap();
        assert!(cert.gamma_bar < 1.0);
        assert!(cert.m_bound.is_finite());
        let mut rng = RngStream::new(10, 0);
        let audit = contraction_audit(&p, &cert, 100, &mut rng).unwrap();
        assert!(audit.max_ratio <= cert.gamma_bar + 1e-9);
        assert!(audit.pairs_tested > 0);
    }

    #[test]
    fn convergence_bound_dominates_exact() {
        let p = two_state();
        let drift = fit_geometric_drift(&p, &[0.0, 1.0], 0.5).unwrap();
        let minor = find_minorization(&p, &drift.v, 1.5).unwrap();
        let cert = hairer_mattingly_constants(&drift, &minor, None, None).unwrap();
        let points = convergence_bound(&p, &cert, 0, &[1.0, -2.0], 50).unwrap();
        for pt in &points {
            assert!(
                pt.exact <= pt.bound + 1e-9,
                "n = {}: exact {} bound {}",
                pt.n,
                pt.exact,
                pt.bound
            );
        }
    }

    #[test]
    fn parameter_windows_are_enforced() {
        let p = two_state();
        let drift = fit_geometric_drift(&p, &[0.0, 1.0], 0.5).unwrap();
        let minor = find_minorization(&p, &drift.v, 1.5).unwrap();
        let err = hairer_mattingly_constants(&drift, &minor, Some(2.0), None).unwrap_err();
        match err {
            Error::ParameterOutOfRange(msg) => assert!(msg.contains("alpha0")),
            other => panic!("unexpected {other:?}"),
        }
    }
}
