//! Metropolis machinery and Monte Carlo estimation: acceptance rules,
//! Glauber and Kawasaki spin dynamics, variance-estimated MCMC averages,
//! sample-size planning, hit-or-miss volume estimation, and the base
//! generators (inverse CDF and Box-Muller).

use serde::{Deserialize, Serialize};

use crate::markov::StochasticMatrix;
use crate::models::{ising_delta, IsingModel, SpinConfig};
use crate::rng::RngStream;
use crate::{Error, Result};

/// Default number of batches for the batch-means variance estimate.
pub const DEFAULT_BATCHES: usize = 16;

/// Miss probability of the reported Chebychev interval: the half-width
/// is `sqrt(var / CI_EPSILON)`, guaranteed without any normality
/// assumption.
pub const CI_EPSILON: f64 = 1e-3;

fn chebychev_halfwidth(variance_of_mean: f64) -> f64 {
    (variance_of_mean / CI_EPSILON).sqrt()
}

/// Which acceptance function a Metropolis-type chain uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleKind {
    /// Accept with probability `min(1, e^{-beta Delta H})`.
    Metropolis,
    /// Accept with probability `1 / (1 + e^{beta Delta H})`.
    Heatbath,
}

/// Acceptance rule with its base proposal rate `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceRule {
    /// Metropolis or heatbath acceptance.
    pub kind: RuleKind,
    /// Base rate multiplying the acceptance probability in matrix entries.
    pub q: f64,
}

impl AcceptanceRule {
    /// Metropolis rule with base rate `q`.
    pub fn metropolis(q: f64) -> AcceptanceRule {
        AcceptanceRule {
            kind: RuleKind::Metropolis,
            q,
        }
    }

    /// Heatbath rule with base rate `q`.
    pub fn heatbath(q: f64) -> AcceptanceRule {
        AcceptanceRule {
            kind: RuleKind::Heatbath,
            q,
        }
    }

    /// The bare acceptance probability for an energy increment, in `[0, 1]`
    /// (the base rate `q` is not included).
    pub fn acceptance(&self, beta: f64, delta_h: f64) -> f64 {
        match self.kind {
            RuleKind::Metropolis => (-beta * delta_h).exp().min(1.0),
            RuleKind::Heatbath => 1.0 / (1.0 + (beta * delta_h).exp()),
        }
    }
}

/// Builds the Metropolis-type chain for an energy landscape over a
/// symmetric neighborhood relation: `p(x, y) = q * a(H(y) - H(x))` for
/// neighbors, diagonal completed to make rows stochastic.
///
/// Both rules satisfy detailed balance with respect to the Gibbs weights
/// `e^{-beta H}`. Edges are symmetrized and deduplicated; self-edges are
/// rejected. If a diagonal entry would be negative the base rate is too
/// large and [`Error::DiagonalNegative`] reports the offending state.
pub fn metropolis_matrix(
    h: &[f64],
    edges: &[(usize, usize)],
    beta: f64,
    rule: &AcceptanceRule,
) -> Result<StochasticMatrix> {
    let n = h.len();
    if n == 0 {
        return Err(Error::EmptySet);
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::ParameterOutOfRange(
            "energies must be finite".into(),
        ));
    }
    if !(rule.q > 0.0) || !rule.q.is_finite() {
        return Err(Error::ParameterOutOfRange(
            "base rate q must be positive".into(),
        ));
    }
    let mut pairs = std::collections::HashSet::new();
    for &(i, j) in edges {
        if i >= n || j >= n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: i.max(j),
            });
        }
        if i == j {
            return Err(Error::ParameterOutOfRange(format!(
                "neighborhood relation must be irreflexive; found self-edge at {i}"
            )));
        }
        pairs.insert((i.min(j), i.max(j)));
    }
    let mut rows = vec![vec![0.0; n]; n];
    for &(i, j) in &pairs {
        rows[i][j] = rule.q * rule.acceptance(beta, h[j] - h[i]);
        rows[j][i] = rule.q * rule.acceptance(beta, h[i] - h[j]);
    }
    for (x, row) in rows.iter_mut().enumerate() {
        let off: f64 = row.iter().sum();
        let diag = 1.0 - off;
        if diag < -1e-12 {
            return Err(Error::DiagonalNegative {
                state: x,
                value: diag,
            });
        }
        row[x] = diag.max(0.0);
    }
    StochasticMatrix::from_rows(&rows, 1e-9)
}

/// The Gibbs distribution `pi(x) = e^{-beta H(x)} / Z` for an energy
/// vector, computed with the max-shift trick for stability.
pub fn gibbs_distribution(h: &[f64], beta: f64) -> Result<Vec<f64>> {
    if h.is_empty() {
        return Err(Error::EmptySet);
    }
    let h_min = h.iter().cloned().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = h.iter().map(|&e| (-beta * (e - h_min)).exp()).collect();
    let z: f64 = weights.iter().sum();
    Ok(weights.iter().map(|&w| w / z).collect())
}

/// Full single-flip state space of an Ising circle: energies indexed by
/// configuration code (bit `k` set means spin `k` up) and the flip edges.
pub fn ising_state_space(model: &IsingModel) -> (Vec<f64>, Vec<(usize, usize)>) {
    let n = model.n;
    let states = 1usize << n;
    let mut h = Vec::with_capacity(states);
    for code in 0..states as u64 {
        let x = SpinConfig::from_code(code, n);
        h.push(crate::models::ising_energy(model, &x));
    }
    let mut edges = Vec::with_capacity(states * n / 2);
    for code in 0..states {
        for k in 0..n {
            let other = code ^ (1 << k);
            if code < other {
                edges.push((code, other));
            }
        }
    }
    (h, edges)
}

/// Probability that a Glauber step from `x` proposing site `k` accepts the
/// flip: `N q * a(beta, Delta H(x, k))`.
pub fn glauber_acceptance(model: &IsingModel, x: &SpinConfig, rule: &AcceptanceRule, k: usize) -> f64 {
    model.n as f64 * model.q * rule.acceptance(model.beta, ising_delta(model, x, k))
}

/// One Glauber step: a uniform site is proposed and flipped with
/// probability `N q * a(beta, Delta H)`, so that the one-step law matches
/// the single-flip Metropolis chain with per-site rate `q`.
///
/// Exactly two uniforms are consumed (site pick, acceptance) whether or
/// not the flip is accepted. Returns the new configuration, the acceptance
/// flag, and the magnetization increment `dm = -2 * (old spin)`, which is
/// `0` on rejection.
pub fn glauber_step(
    model: &IsingModel,
    x: &SpinConfig,
    rule: &AcceptanceRule,
    rng: &mut RngStream,
) -> (SpinConfig, bool, i64) {
    let n = model.n;
    let k = ((rng.next_f64() * n as f64) as usize).min(n - 1);
    let accept_prob = glauber_acceptance(model, x, rule, k);
    let u = rng.next_f64();
    if u < accept_prob {
        let old = x.spins()[k] as i64;
        (x.flipped(k), true, -2 * old)
    } else {
        (x.clone(), false, 0)
    }
}

/// One Kawasaki step: a uniform pair of opposite spins is proposed for
/// exchange and accepted with probability `a(beta, Delta H)`; the
/// magnetization is conserved along the whole trajectory.
///
/// Exactly three uniforms are consumed. Fails with
/// [`Error::NoOppositePair`] when the configuration is constant.
pub fn kawasaki_step(
    model: &IsingModel,
    x: &SpinConfig,
    rule: &AcceptanceRule,
    rng: &mut RngStream,
) -> Result<(SpinConfig, bool)> {
    let plus: Vec<usize> = (0..x.len()).filter(|&k| x.spins()[k] == 1).collect();
    let minus: Vec<usize> = (0..x.len()).filter(|&k| x.spins()[k] == -1).collect();
    if plus.is_empty() || minus.is_empty() {
        return Err(Error::NoOppositePair);
    }
    let i = plus[((rng.next_f64() * plus.len() as f64) as usize).min(plus.len() - 1)];
    let j = minus[((rng.next_f64() * minus.len() as f64) as usize).min(minus.len() - 1)];
    let delta = ising_delta(model, x, i) + ising_delta(model, &x.flipped(i), j);
    let accept_prob = rule.acceptance(model.beta, delta);
    let u = rng.next_f64();
    if u < accept_prob {
        let mut y = x.clone();
        y.flip(i);
        y.flip(j);
        Ok((y, true))
    } else {
        Ok((x.clone(), false))
    }
}

/// Sample-size plan for a target precision `delta` and failure probability
/// `eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    /// Target precision.
    pub delta: f64,
    /// Allowed failure probability.
    pub eps: f64,
    /// Variance bound used by the plan.
    pub var_bound: f64,
    /// Correlation factor `rho`, when the chain is not independent.
    pub rho: Option<f64>,
    /// Rigorous Chebychev sample count
    /// `ceil(var_bound / (delta^2 eps))`, times `(1+rho)/(1-rho)` when
    /// `rho` is given.
    pub n_required: u128,
    /// Central-limit-theorem sample count
    /// `ceil(2 var_bound log(1/eps) / delta^2)`; a heuristic, never used
    /// as a guarantee.
    pub n_clt_heuristic: u128,
}

/// Plans the number of samples needed for `|S_n - mean| <= delta` with
/// probability at least `1 - eps`, by the Chebychev inequality.
pub fn plan_samples(
    delta: f64,
    eps: f64,
    var_bound: f64,
    rho: Option<f64>,
) -> Result<SamplePlan> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::ParameterOutOfRange(
            "precision delta must lie in (0, 1]".into(),
        ));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::ParameterOutOfRange(
            "failure probability eps must lie in (0, 1)".into(),
        ));
    }
    if !(var_bound > 0.0) || !var_bound.is_finite() {
        return Err(Error::ParameterOutOfRange(
            "variance bound must be positive and finite".into(),
        ));
    }
    if let Some(r) = rho {
        if !(0.0..1.0).contains(&r) {
            return Err(Error::ParameterOutOfRange(
                "correlation factor rho must lie in [0, 1)".into(),
            ));
        }
    }
    let factor = rho.map_or(1.0, |r| (1.0 + r) / (1.0 - r));
    let base = var_bound / (delta * delta * eps) * factor;
    let clt = 2.0 * var_bound * (1.0 / eps).ln() / (delta * delta) * factor;
    if base >= 3.4e38 || clt >= 3.4e38 {
        return Err(Error::ParameterOutOfRange(
            "sample plan exceeds representable counts".into(),
        ));
    }
    // Ceiling with a snap to the nearest integer, so that analytically
    // integer counts are not pushed up by one ulp of rounding.
    let snap_ceil = |x: f64| -> u128 {
        let r = x.round();
        if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
            r as u128
        } else {
            x.ceil() as u128
        }
    };
    Ok(SamplePlan {
        delta,
        eps,
        var_bound,
        rho,
        n_required: snap_ceil(base),
        n_clt_heuristic: snap_ceil(clt).max(1),
    })
}

/// Monte Carlo estimate with its variance diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    /// Number of retained samples.
    pub n: u64,
    /// The empirical mean `S_n`.
    pub mean: f64,
    /// Batch-means estimate of `Var(S_n)`.
    #[serde(rename = "var_est")]
    pub variance_estimate: f64,
    /// Stationary-start bound `((1+rho)/(1-rho)) Var(Y) / n` when a
    /// spectral bound `rho` is supplied (plug-in sample variance of `Y`).
    #[serde(rename = "var_bound")]
    pub variance_bound: Option<f64>,
    /// Chebychev half-width at miss probability [`CI_EPSILON`], computed
    /// from the variance bound when one is available and from the
    /// variance estimate otherwise.
    #[serde(rename = "ci")]
    pub ci_halfwidth: f64,
    /// Sample-size plan, when one was requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub planner: Option<SamplePlan>,
}

/// Runs a chain and averages an observable along the trajectory.
///
/// After `burn_in` steps, `n` samples are taken observe-then-step. The
/// variance of the mean is estimated by batch means over `batches`
/// batches; when `rho` is supplied the stationary-start variance bound
/// `((1+rho)/(1-rho)) Var(Y)/n` is reported with the sample variance of
/// the observations standing in for the stationary variance.
#[allow(clippy::too_many_arguments)]
pub fn mcmc_estimate<S, F, Y>(
    initial: S,
    mut step: F,
    mut observable: Y,
    n: u64,
    burn_in: u64,
    batches: usize,
    rho: Option<f64>,
    rng: &mut RngStream,
) -> Result<EstimatorReport>
where
    F: FnMut(&mut S, &mut RngStream),
    Y: FnMut(&S) -> f64,
{
    if n == 0 {
        return Err(Error::ParameterOutOfRange(
            "sample count must be positive".into(),
        ));
    }
    if let Some(r) = rho {
        if !(0.0..1.0).contains(&r) {
            return Err(Error::ParameterOutOfRange(
                "correlation factor rho must lie in [0, 1)".into(),
            ));
        }
    }
    let mut state = initial;
    for _ in 0..burn_in {
        step(&mut state, rng);
    }
    let mut samples = Vec::with_capacity(n as usize);
    for m in 0..n {
        samples.push(observable(&state));
        if m + 1 < n {
            step(&mut state, rng);
        }
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var_path = if n > 1 {
        samples.iter().map(|&y| (y - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)
    } else {
        0.0
    };
    let b = batches.clamp(1, n as usize);
    let batch_len = (n as usize) / b;
    let variance_estimate = if b >= 2 && batch_len >= 1 {
        let means: Vec<f64> = (0..b)
            .map(|i| {
                samples[i * batch_len..(i + 1) * batch_len]
                    .iter()
                    .sum::<f64>()
                    / batch_len as f64
            })
            .collect();
        let grand = means.iter().sum::<f64>() / b as f64;
        let s2 = means.iter().map(|&m| (m - grand).powi(2)).sum::<f64>() / (b as f64 - 1.0);
        s2 / b as f64
    } else {
        0.0
    };
    let variance_bound = rho.map(|r| (1.0 + r) / (1.0 - r) * var_path / n as f64);
    Ok(EstimatorReport {
        n,
        mean,
        variance_estimate,
        variance_bound,
        ci_halfwidth: chebychev_halfwidth(variance_bound.unwrap_or(variance_estimate)),
        planner: None,
    })
}

/// Advances a finite-chain state by one transition of `p`.
pub fn matrix_step(p: &StochasticMatrix, state: &mut usize, rng: &mut RngStream) {
    *state = rng.choose_weighted(p.row(*state));
}

/// One constraint of a volume description inside the unit cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Inequality {
    /// `a . x + b >= 0`.
    Affine {
        /// Coefficient vector.
        a: Vec<f64>,
        /// Offset.
        b: f64,
    },
    /// `radius^2 - |x - center|^2 >= 0`.
    Ball {
        /// Ball center.
        center: Vec<f64>,
        /// Ball radius.
        radius: f64,
    },
}

impl Inequality {
    fn dimension(&self) -> usize {
        match self {
            Inequality::Affine { a, .. } => a.len(),
            Inequality::Ball { center, .. } => center.len(),
        }
    }

    /// Whether the point satisfies the constraint.
    pub fn holds(&self, x: &[f64]) -> bool {
        match self {
            Inequality::Affine { a, b } => {
                a.iter().zip(x).map(|(ai, xi)| ai * xi).sum::<f64>() + b >= 0.0
            }
            Inequality::Ball { center, radius } => {
                let d2: f64 = center.iter().zip(x).map(|(c, xi)| (xi - c).powi(2)).sum();
                radius * radius - d2 >= 0.0
            }
        }
    }
}

/// Hit-or-miss volume estimate of the region of the unit cube
/// `[0,1]^dim` cut out by the inequalities.
///
/// Each sample consumes exactly `dim` uniforms. The reported variance
/// estimate is the binomial `p(1-p)/n` and the variance bound is the
/// universal indicator bound `1/(4n)`.
pub fn mc_volume(
    dim: usize,
    inequalities: &[Inequality],
    n: u64,
    rng: &mut RngStream,
) -> Result<EstimatorReport> {
    if dim == 0 {
        return Err(Error::ParameterOutOfRange(
            "dimension must be positive".into(),
        ));
    }
    if n == 0 {
        return Err(Error::ParameterOutOfRange(
            "sample count must be positive".into(),
        ));
    }
    for ineq in inequalities {
        if ineq.dimension() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: ineq.dimension(),
            });
        }
    }
    let mut hits = 0u64;
    let mut x = vec![0.0; dim];
    for _ in 0..n {
        for slot in x.iter_mut() {
            *slot = rng.next_f64();
        }
        if inequalities.iter().all(|ineq| ineq.holds(&x)) {
            hits += 1;
        }
    }
    let mean = hits as f64 / n as f64;
    let variance_estimate = mean * (1.0 - mean) / n as f64;
    let variance_bound = 0.25 / n as f64;
    Ok(EstimatorReport {
        n,
        mean,
        variance_estimate,
        variance_bound: Some(variance_bound),
        ci_halfwidth: chebychev_halfwidth(variance_bound),
        planner: None,
    })
}

/// Inverse CDF of the exponential law at `u`: `-(1/lambda) log(1 - u)`.
pub fn exponential_inverse_cdf(u: f64, lambda: f64) -> f64 {
    -(1.0 - u).ln() / lambda
}

/// Draws one exponential sample of rate `lambda`, consuming exactly one
/// uniform.
pub fn sample_exponential(lambda: f64, rng: &mut RngStream) -> f64 {
    assert!(
        lambda > 0.0 && lambda.is_finite(),
        "exponential rate must be positive"
    );
    exponential_inverse_cdf(rng.next_f64(), lambda)
}

/// Box-Muller transform of two uniforms: `R = sqrt(-2 log(1-u))`,
/// `Phi = 2 pi v`, returning `(R cos Phi, R sin Phi)`.
pub fn normal_pair_from_uniforms(u: f64, v: f64) -> (f64, f64) {
    let r = (-2.0 * (1.0 - u).ln()).sqrt();
    let phi = 2.0 * std::f64::consts::PI * v;
    (r * phi.cos(), r * phi.sin())
}

/// Draws an independent standard normal pair by Box-Muller, consuming
/// exactly two uniforms.
pub fn sample_normal_pair(rng: &mut RngStream) -> (f64, f64) {
    let u = rng.next_f64();
    let v = rng.next_f64();
    normal_pair_from_uniforms(u, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov;

    #[test]
    fn metropolis_two_state_hand_values() {
        let rule = AcceptanceRule::metropolis(0.5);
        let p = metropolis_matrix(&[0.0, 1.0], &[(0, 1)], 1.0, &rule).unwrap();
        assert!((p.get(0, 1) - 0.5 * (-1.0f64).exp()).abs() < 1e-15);
        assert!((p.get(1, 0) - 0.5).abs() < 1e-15);
        // Detailed balance with Gibbs weights.
        let lhs = 1.0 * p.get(0, 1);
        let rhs = (-1.0f64).exp() * p.get(1, 0);
        assert!((lhs - rhs).abs() < 1e-15);
    }

    #[test]
    fn infinite_temperature_flattens_acceptance() {
        let rule = AcceptanceRule::metropolis(0.25);
        let p = metropolis_matrix(&[3.0, -1.0, 7.0], &[(0, 1), (1, 2), (0, 2)], 0.0, &rule)
            .unwrap();
        for x in 0..3 {
            for y in 0..3 {
                if x != y {
                    assert_eq!(p.get(x, y), 0.25);
                }
            }
        }
    }

    #[test]
    fn heatbath_detailed_balance_random_landscape() {
        let mut rng = RngStream::new(42, 0);
        for case in 0..50 {
            let n = 3 + (case % 5);
            let h: Vec<f64> = (0..n).map(|_| 4.0 * rng.next_f64() - 2.0).collect();
            let mut edges = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.next_f64() < 0.6 {
                        edges.push((i, j));
                    }
                }
            }
            if edges.is_empty() {
                edges.push((0, 1));
            }
            let beta = 2.0 * rng.next_f64();
            for rule in [AcceptanceRule::heatbath(0.1), AcceptanceRule::metropolis(0.1)] {
                let p = metropolis_matrix(&h, &edges, beta, &rule).unwrap();
                for &(i, j) in &edges {
                    let lhs = (-beta * h[i]).exp() * p.get(i, j);
                    let rhs = (-beta * h[j]).exp() * p.get(j, i);
                    assert!(
                        (lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(1.0),
                        "case {case} edge ({i},{j})"
                    );
                }
            }
        }
    }

    #[test]
    fn diagonal_negative_when_rate_too_large() {
        let rule = AcceptanceRule::metropolis(0.6);
        let err = metropolis_matrix(&[0.0, 0.0, 0.0], &[(0, 1), (0, 2)], 1.0, &rule).unwrap_err();
        assert!(matches!(err, Error::DiagonalNegative { state: 0, .. }));
    }

    #[test]
    fn ising_gibbs_is_invariant() {
        let model = IsingModel::new(8, 0.5, 0.5, None).unwrap();
        let (h, edges) = ising_state_space(&model);
        let rule = AcceptanceRule::metropolis(model.q);
        let p = metropolis_matrix(&h, &edges, model.beta, &rule).unwrap();
        let pi = markov::invariant_distribution(&p).unwrap();
        let gibbs = gibbs_distribution(&h, model.beta).unwrap();
        let dist = markov::l1_distance(&pi, &gibbs);
        assert!(dist < 1e-10, "L1 distance {dist}");
    }

    #[test]
    fn free_glauber_generator_identity() {
        // At infinite temperature the single-flip chain is the hypercube
        // walk and L(m^2) = -(4/N) m^2 + 4 exactly.
        let n = 8;
        let model = IsingModel::new(n, 0.0, 0.5, None).unwrap();
        let (h, edges) = ising_state_space(&model);
        let rule = AcceptanceRule::metropolis(model.q);
        let p = metropolis_matrix(&h, &edges, model.beta, &rule).unwrap();
        let m2: Vec<f64> = (0..1u64 << n)
            .map(|code| {
                let m = SpinConfig::from_code(code, n).magnetization() as f64;
                m * m
            })
            .collect();
        let lv = crate::lyapunov::generator_apply(&p, &m2).unwrap();
        for (code, &value) in lv.iter().enumerate() {
            let m = SpinConfig::from_code(code as u64, n).magnetization() as f64;
            assert_eq!(value, -(4.0 / n as f64) * m * m + 4.0, "code {code}");
        }
    }

    #[test]
    fn glauber_acceptance_from_ground_state() {
        let n = 10;
        let model = IsingModel::new(n, 3.0, 0.5, None).unwrap();
        let rule = AcceptanceRule::metropolis(model.q);
        let plus = SpinConfig::all_plus(n);
        let expect = (-3.0f64 * (4.0 + 2.0 * 0.5)).exp();
        for k in 0..n {
            assert!((glauber_acceptance(&model, &plus, &rule, k) - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn glauber_incremental_magnetization_bookkeeping() {
        let n = 12;
        let model = IsingModel::new(n, 0.4, 0.5, None).unwrap();
        let rule = AcceptanceRule::metropolis(model.q);
        let mut rng = RngStream::new(5, 1);
        let mut x = SpinConfig::all_minus(n);
        let mut m = x.magnetization();
        for step in 0..10_000 {
            let (next, accepted, dm) = glauber_step(&model, &x, &rule, &mut rng);
            assert_eq!(accepted, dm != 0, "step {step}");
            m += dm;
            x = next;
            assert_eq!(m, x.magnetization(), "step {step}");
        }
    }

    #[test]
    fn kawasaki_conserves_magnetization() {
        let n = 10;
        let model = IsingModel::new(n, 0.8, 0.5, None).unwrap();
        let rule = AcceptanceRule::heatbath(model.q);
        let mut rng = RngStream::new(6, 2);
        let mut spins = vec![1i8; n];
        for s in spins.iter_mut().take(n / 2) {
            *s = -1;
        }
        let mut x = SpinConfig::new(spins).unwrap();
        let m0 = x.magnetization();
        for _ in 0..100_000 {
            let (next, _) = kawasaki_step(&model, &x, &rule, &mut rng).unwrap();
            x = next;
            assert_eq!(x.magnetization(), m0);
        }
    }

    #[test]
    fn kawasaki_needs_an_opposite_pair() {
        let model = IsingModel::new(6, 1.0, 0.5, None).unwrap();
        let rule = AcceptanceRule::metropolis(model.q);
        let mut rng = RngStream::new(1, 0);
        let err = kawasaki_step(&model, &SpinConfig::all_plus(6), &rule, &mut rng).unwrap_err();
        assert_eq!(err, Error::NoOppositePair);
    }

    #[test]
    fn kawasaki_exchange_energies_enumerated() {
        let n = 4;
        let model = IsingModel::new(n, 1.0, 0.5, None).unwrap();
        let x = SpinConfig::new(vec![1, 1, -1, -1]).unwrap();
        for i in [0usize, 1] {
            for j in [2usize, 3] {
                let mut y = x.clone();
                y.flip(i);
                y.flip(j);
                let diff = crate::models::ising_energy(&model, &y)
                    - crate::models::ising_energy(&model, &x);
                let delta = ising_delta(&model, &x, i) + ising_delta(&model, &x.flipped(i), j);
                assert_eq!(diff, delta, "pair ({i},{j})");
                assert!(
                    diff == -4.0 || diff == 0.0 || diff == 4.0,
                    "pair ({i},{j}): {diff}"
                );
            }
        }
    }

    #[test]
    fn estimator_constant_observable() {
        let p = StochasticMatrix::from_rows(
            &[vec![0.5, 0.5], vec![0.5, 0.5]],
            1e-9,
        )
        .unwrap();
        let mut rng = RngStream::new(3, 0);
        let report = mcmc_estimate(
            0usize,
            |s, r| matrix_step(&p, s, r),
            |_| 2.5,
            1000,
            10,
            DEFAULT_BATCHES,
            None,
            &mut rng,
        )
        .unwrap();
        assert_eq!(report.mean, 2.5);
        assert_eq!(report.variance_estimate, 0.0);
        assert_eq!(report.ci_halfwidth, 0.0);
    }

    #[test]
    fn estimator_reproducible_across_runs() {
        let p = crate::models::ehrenfest_matrix(10).unwrap();
        let run = || {
            let mut rng = RngStream::new(99, 7);
            mcmc_estimate(
                5usize,
                |s, r| matrix_step(&p, s, r),
                |&s| s as f64,
                5000,
                100,
                DEFAULT_BATCHES,
                Some(0.5),
                &mut rng,
            )
            .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(
            a.variance_estimate.to_bits(),
            b.variance_estimate.to_bits()
        );
        assert!(a.variance_bound.is_some());
    }

    #[test]
    fn planner_examples() {
        let plan = plan_samples(1e-4, 1e-6, 1.0, None).unwrap();
        assert_eq!(plan.n_required, 100_000_000_000_000u128);
        let with_rho = plan_samples(1e-4, 1e-6, 1.0, Some(1.0 / 3.0)).unwrap();
        assert_eq!(with_rho.n_required, 200_000_000_000_000u128);
        let unit = plan_samples(1.0, 0.01, 1.0, None).unwrap();
        assert_eq!(unit.n_required, 100);
        assert!(plan_samples(0.0, 0.5, 1.0, None).is_err());
        assert!(plan_samples(0.5, 1.0, 1.0, None).is_err());
        assert!(plan_samples(0.5, 0.5, -1.0, None).is_err());
    }

    #[test]
    fn planner_clt_stays_heuristic_and_smaller_here() {
        let plan = plan_samples(1e-2, 1e-3, 1.0, None).unwrap();
        // Chebychev: 1e7; CLT: 2 ln(1000) / 1e-4 ~ 1.4e5.
        assert_eq!(plan.n_required, 10_000_000);
        assert!(plan.n_clt_heuristic < plan.n_required);
    }

    #[test]
    fn volume_of_whole_cube() {
        let mut rng = RngStream::new(0, 0);
        let report = mc_volume(3, &[], 100, &mut rng).unwrap();
        assert_eq!(report.mean, 1.0);
        assert_eq!(report.variance_estimate, 0.0);
    }

    #[test]
    fn volume_of_disk_and_half_cube() {
        let disk = vec![Inequality::Ball {
            center: vec![0.5, 0.5],
            radius: 0.5,
        }];
        let mut rng = RngStream::new(11, 0);
        let report = mc_volume(2, &disk, 10_000, &mut rng).unwrap();
        let target = std::f64::consts::PI / 4.0;
        assert!(
            (report.mean - target).abs() <= report.ci_halfwidth.max(4.0 * (0.25f64 / 10_000.0).sqrt()),
            "estimate {} target {target}",
            report.mean
        );
        let half = vec![Inequality::Affine {
            a: {
                let mut a = vec![0.0; 10];
                a[0] = -1.0;
                a
            },
            b: 0.5,
        }];
        let mut rng = RngStream::new(12, 0);
        let report = mc_volume(10, &half, 10_000, &mut rng).unwrap();
        assert!((report.mean - 0.5).abs() <= report.ci_halfwidth);
    }

    #[test]
    fn inequality_json_schema_round_trip() {
        let ineqs = vec![
            Inequality::Affine {
                a: vec![1.0, -2.0],
                b: 0.25,
            },
            Inequality::Ball {
                center: vec![0.5, 0.5],
                radius: 0.5,
            },
        ];
        let json = serde_json::to_string(&ineqs).unwrap();
        assert!(json.contains("\"type\":\"affine\""));
        assert!(json.contains("\"type\":\"ball\""));
        let back: Vec<Inequality> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, ineqs);
    }

    #[test]
    fn exponential_inverse_cdf_fixed_point() {
        let u = 1.0 - (-1.0f64).exp();
        assert!((exponential_inverse_cdf(u, 2.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn exponential_sample_mean() {
        let mut rng = RngStream::new(2024, 3);
        let n = 1_000_000;
        let mean: f64 = (0..n).map(|_| sample_exponential(2.0, &mut rng)).sum::<f64>() / n as f64;
        // Standard error 0.5 / sqrt(n) = 5e-4; allow 4 sigma.
        assert!((mean - 0.5).abs() < 2e-3, "mean {mean}");
    }

    #[test]
    fn normal_pair_moments() {
        let mut rng = RngStream::new(7, 7);
        let n = 1_000_000usize;
        let (mut s1, mut s2, mut q1, mut q2, mut cross) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let (a, b) = sample_normal_pair(&mut rng);
            s1 += a;
            s2 += b;
            q1 += a * a;
            q2 += b * b;
            cross += a * b;
        }
        let nf = n as f64;
        assert!((s1 / nf).abs() <= 4e-3);
        assert!((s2 / nf).abs() <= 4e-3);
        assert!((0.99..=1.01).contains(&(q1 / nf)));
        assert!((0.99..=1.01).contains(&(q2 / nf)));
        assert!((cross / nf - s1 / nf * (s2 / nf)).abs() <= 4e-3);
    }
}
