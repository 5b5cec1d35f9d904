//! Continuous-state chains on an interval: density kernels, quadrature
//! discretization, killed and potential kernels, Harris-recurrence
//! diagnostics, and the AR(1) worked example with its closed-form drift,
//! minorization, and invariant law.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::lyapunov::{contraction_constants, ContractionConstants};
use crate::markov::{self, StochasticMatrix};
use crate::rng::RngStream;
use crate::sampler::sample_normal_pair;
use crate::{Error, Result};

/// Default declared bound on the mass a kernel row may leak outside the
/// truncation window.
pub const DEFAULT_TAIL_TOL: f64 = 1e-6;

/// Default sup-norm increment at which the Neumann series is truncated.
pub const NEUMANN_TOL: f64 = 1e-10;

/// Nodes of the internal refined grid used to audit row masses.
const REFINED_NODES: usize = 4097;

/// A Markov kernel with a transition density on the real line.
///
/// The kernel declares the largest mass any row may place outside the
/// truncation window that will be used to discretize it; presets declare
/// their analytic worst-row bound, hand-built kernels default to
/// [`DEFAULT_TAIL_TOL`].
pub struct DensityKernel {
    density: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    sampler: Box<dyn Fn(f64, &mut RngStream) -> f64 + Send + Sync>,
    /// Declared bound on the per-row mass outside the truncation window.
    pub tail_tolerance: f64,
}

impl std::fmt::Debug for DensityKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DensityKernel")
            .field("tail_tolerance", &self.tail_tolerance)
            .finish_non_exhaustive()
    }
}

impl DensityKernel {
    /// Wraps a density oracle and a sampler with a declared tail bound.
    pub fn new<D, S>(density: D, sampler: S, tail_tolerance: f64) -> Result<DensityKernel>
    where
        D: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        S: Fn(f64, &mut RngStream) -> f64 + Send + Sync + 'static,
    {
        if !(tail_tolerance > 0.0 && tail_tolerance <= 1.0) {
            return Err(Error::ParameterOutOfRange(
                "tail tolerance must lie in (0, 1]".into(),
            ));
        }
        Ok(DensityKernel {
            density: Box::new(density),
            sampler: Box::new(sampler),
            tail_tolerance,
        })
    }

    /// Evaluates the transition density `p(x, y)`.
    pub fn density(&self, x: f64, y: f64) -> f64 {
        (self.density)(x, y)
    }

    /// Draws one step of the chain from `x`.
    pub fn sample(&self, x: f64, rng: &mut RngStream) -> f64 {
        (self.sampler)(x, rng)
    }
}

/// Composite Simpson rule over `[lo, hi]` with an even interval count.
fn simpson<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, intervals: usize) -> f64 {
    debug_assert!(intervals >= 2 && intervals % 2 == 0);
    let h = (hi - lo) / intervals as f64;
    let mut sum = f(lo) + f(hi);
    for k in 1..intervals {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(lo + k as f64 * h);
    }
    sum * h / 3.0
}

/// A trapezoid-rule discretization of a density kernel on `[-L, L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridChain {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    matrix: StochasticMatrix,
    defects: Vec<f64>,
}

impl GridChain {
    /// Quadrature nodes, uniformly spaced on `[-L, L]`.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Trapezoid weights matching the nodes.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The row-stochastic discretized kernel.
    pub fn matrix(&self) -> &StochasticMatrix {
        &self.matrix
    }

    /// Pre-normalization row-sum defects `|1 - sum|`, one per row.
    pub fn defects(&self) -> &[f64] {
        &self.defects
    }

    /// Index of the node closest to `x`.
    pub fn node_nearest(&self, x: f64) -> usize {
        let mut best = 0;
        let mut dist = f64::INFINITY;
        for (i, &node) in self.nodes.iter().enumerate() {
            let d = (x - node).abs();
            if d < dist {
                dist = d;
                best = i;
            }
        }
        best
    }
}

/// Discretizes a kernel on `[-L, L]` with `M` trapezoid nodes.
///
/// Each row's true mass on the window is audited on a refined Simpson
/// grid against the kernel's declared tail tolerance
/// ([`Error::TailMassTooLarge`] on failure); the coarse rows are then
/// renormalized, recording each pre-normalization defect.
pub fn discretize(kernel: &DensityKernel, l: f64, m: usize) -> Result<GridChain> {
    if !(l > 0.0) || !l.is_finite() {
        return Err(Error::ParameterOutOfRange(
            "half-width must be positive and finite".into(),
        ));
    }
    if m < 16 {
        return Err(Error::ParameterOutOfRange(
            "grid needs at least 16 nodes".into(),
        ));
    }
    let h = 2.0 * l / (m - 1) as f64;
    let nodes: Vec<f64> = (0..m).map(|i| -l + i as f64 * h).collect();
    let mut weights = vec![h; m];
    weights[0] = h / 2.0;
    weights[m - 1] = h / 2.0;
    for (i, &x) in nodes.iter().enumerate() {
        let mass = simpson(|y| kernel.density(x, y), -l, l, REFINED_NODES - 1);
        let defect = (1.0 - mass).abs();
        if defect > kernel.tail_tolerance {
            return Err(Error::TailMassTooLarge { row: i, defect });
        }
    }
    let mut rows = vec![vec![0.0; m]; m];
    let mut defects = vec![0.0; m];
    for (i, &x) in nodes.iter().enumerate() {
        for (j, &y) in nodes.iter().enumerate() {
            rows[i][j] = weights[j] * kernel.density(x, y);
        }
        let sum: f64 = rows[i].iter().sum();
        defects[i] = (1.0 - sum).abs();
    }
    let matrix = StochasticMatrix::from_rows(&rows, 0.1)?;
    Ok(GridChain {
        nodes,
        weights,
        matrix,
        defects,
    })
}

/// Density values at the nodes of the `n`-step law started from node `x`:
/// row `x` of the `n`-th matrix power divided by the quadrature weights.
pub fn nstep_density(chain: &GridChain, x: usize, n: u64) -> Result<Vec<f64>> {
    let m = chain.nodes.len();
    if x >= m {
        return Err(Error::DimensionMismatch { expected: m, got: x });
    }
    if n == 0 {
        return Err(Error::ParameterOutOfRange(
            "step count must be positive".into(),
        ));
    }
    let mut mu = chain.matrix.row(x).to_vec();
    for _ in 1..n {
        mu = markov::evolve_measure(&mu, &chain.matrix, 1)?;
    }
    Ok(mu
        .iter()
        .zip(&chain.weights)
        .map(|(&p, &w)| p / w)
        .collect())
}

/// The killed transition matrix: columns of the target set zeroed.
fn killed_matrix(chain: &GridChain, b: &[usize]) -> Result<DMatrix<f64>> {
    let m = chain.nodes.len();
    if b.is_empty() {
        return Err(Error::EmptyTargetSet);
    }
    let mut dag = chain.matrix.to_dmatrix();
    for &j in b {
        if j >= m {
            return Err(Error::DimensionMismatch { expected: m, got: j });
        }
        for i in 0..m {
            dag[(i, j)] = 0.0;
        }
    }
    Ok(dag)
}

/// Powers of the killed kernel `(p-dagger)^n` for `n = 1..=n_max`; row
/// sums are the survival probabilities `P_x[tau_B > n]` and decrease in
/// `n`.
pub fn killed_kernel_powers(
    chain: &GridChain,
    b: &[usize],
    n_max: u64,
) -> Result<Vec<DMatrix<f64>>> {
    if n_max == 0 {
        return Err(Error::ParameterOutOfRange(
            "power count must be positive".into(),
        ));
    }
    let dag = killed_matrix(chain, b)?;
    let mut out = Vec::with_capacity(n_max as usize);
    out.push(dag.clone());
    for k in 1..n_max as usize {
        let next = &out[k - 1] * &dag;
        out.push(next);
    }
    Ok(out)
}

/// Spectral-radius estimate of a nonnegative matrix by normalized power
/// iteration on a positive left vector.
fn radius_estimate(dag: &DMatrix<f64>) -> f64 {
    let m = dag.nrows();
    let mut w = vec![1.0 / m as f64; m];
    let mut radius = 0.0;
    for _ in 0..60 {
        let mut next = vec![0.0; m];
        for i in 0..m {
            let wi = w[i];
            if wi == 0.0 {
                continue;
            }
            for j in 0..m {
                next[j] += wi * dag[(i, j)];
            }
        }
        let norm: f64 = next.iter().sum();
        if norm == 0.0 {
            return 0.0;
        }
        radius = norm;
        for e in next.iter_mut() {
            *e /= norm;
        }
        w = next;
    }
    radius
}

/// Potential kernel of the killed chain: the Neumann series
/// `sum_{n>=1} (p-dagger)^n`, summed by repeated doubling and truncated
/// when the sup-norm of the increment drops below `tol`.
///
/// The spectral radius of the killed matrix is estimated by power
/// iteration first; a radius at or above 1 fails with
/// [`Error::SeriesDiverges`]. Row sums of the result are
/// `E_x[tau_B] - 1`.
pub fn potential_kernel(chain: &GridChain, b: &[usize], tol: f64) -> Result<DMatrix<f64>> {
    if !(tol > 0.0) {
        return Err(Error::ParameterOutOfRange(
            "truncation tolerance must be positive".into(),
        ));
    }
    let dag = killed_matrix(chain, b)?;
    let radius = radius_estimate(&dag);
    if radius >= 1.0 - 1e-12 {
        return Err(Error::SeriesDiverges { radius });
    }
    let mut sum = dag.clone();
    let mut term = dag;
    for _ in 0..64 {
        let increment = &term * &sum;
        let delta = increment.amax();
        sum += &increment;
        if delta < tol {
            return Ok(sum);
        }
        term = &term * &term;
        if sum.amax() > 1e12 {
            break;
        }
    }
    Err(Error::SeriesDiverges { radius })
}

/// Outcome of a simulated Harris-recurrence diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct HarrisReport {
    /// Fraction of replicas that entered the target interval by the cap.
    pub hit_fraction: f64,
    /// Mean hitting step over the replicas that hit; absent when none
    /// did.
    pub mean_hitting_estimate: Option<f64>,
    /// Number of replicas censored at the cap.
    pub censored: u64,
}

/// Simulates replicas of the kernel from `x0` until they enter
/// `[interval.0, interval.1]` or `cap` steps elapse.
///
/// Hitting times count from 1: a replica whose first step lands in the
/// interval hits at time 1. Censored replicas are excluded from the mean
/// and counted separately; Harris recurrence is diagnosed, never
/// certified.
pub fn harris_diagnostics(
    kernel: &DensityKernel,
    x0: f64,
    interval: (f64, f64),
    cap: u64,
    replicas: u64,
    base: &RngStream,
) -> Result<HarrisReport> {
    if interval.0 > interval.1 {
        return Err(Error::ParameterOutOfRange(
            "interval bounds must be ordered".into(),
        ));
    }
    if cap == 0 || replicas == 0 {
        return Err(Error::ParameterOutOfRange(
            "cap and replica count must be positive".into(),
        ));
    }
    let times: Vec<Option<u64>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = base.substream(r);
            let mut x = x0;
            for step in 1..=cap {
                x = kernel.sample(x, &mut rng);
                if x >= interval.0 && x <= interval.1 {
                    return Some(step);
                }
            }
            None
        })
        .collect();
    let hits: Vec<u64> = times.iter().filter_map(|&t| t).collect();
    let censored = replicas - hits.len() as u64;
    let mean = if hits.is_empty() {
        None
    } else {
        Some(hits.iter().sum::<u64>() as f64 / hits.len() as f64)
    };
    Ok(HarrisReport {
        hit_fraction: hits.len() as f64 / replicas as f64,
        mean_hitting_estimate: mean,
        censored,
    })
}

/// The autoregressive chain `X_{n+1} = a X_n + sigma xi_{n+1}` with
/// standard Gaussian innovations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ar1Model {
    /// Autoregression coefficient.
    pub a: f64,
    /// Innovation standard deviation, positive.
    pub sigma: f64,
}

impl Ar1Model {
    /// Validates the parameters; `|a| >= 1` is allowed here and rejected
    /// only by the operations that need contraction.
    pub fn new(a: f64, sigma: f64) -> Result<Ar1Model> {
        if !a.is_finite() {
            return Err(Error::ParameterOutOfRange(
                "autoregression coefficient must be finite".into(),
            ));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::ParameterOutOfRange(
                "innovation scale must be positive and finite".into(),
            ));
        }
        Ok(Ar1Model { a, sigma })
    }
}

fn gaussian_density(mean: f64, sigma: f64, y: f64) -> f64 {
    let z = (y - mean) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

/// Upper bound on the two-sided Gaussian tail mass beyond `z` standard
/// deviations: `2 phi(z) / z`, clamped into `[floor, 1]`.
fn declared_tail_bound(z: f64) -> f64 {
    if z <= 0.0 {
        return 1.0;
    }
    let phi = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    (2.0 * phi / z).clamp(1e-9, 1.0)
}

/// Gaussian transition kernel of an AR(1) model, declaring its analytic
/// worst-row tail bound for the window `[-L, L]` (clamped into
/// `[1e-9, 1e-4]`; a window too small for the declared bound to stay
/// below 1e-4 is rejected at discretization time).
pub fn ar1_kernel(model: &Ar1Model, l: f64) -> Result<DensityKernel> {
    if !(l > 0.0) || !l.is_finite() {
        return Err(Error::ParameterOutOfRange(
            "half-width must be positive and finite".into(),
        ));
    }
    let (a, sigma) = (model.a, model.sigma);
    // Worst row x = +-L: the step mean |a| L sits (1 - |a|) L / sigma
    // standard deviations inside the window.
    let z = (l - a.abs() * l) / sigma;
    let tol = declared_tail_bound(z).min(1e-4).max(1e-9);
    DensityKernel::new(
        move |x, y| gaussian_density(a * x, sigma, y),
        move |x, rng| a * x + sigma * sample_normal_pair(rng).0,
        tol,
    )
}

/// Noisy logistic map `X_{n+1} = r X_n (1 - X_n) + sigma xi` with the map
/// evaluated on the state clamped into `[0, 1]`; Gaussian innovations.
pub fn noisy_logistic_kernel(r: f64, sigma: f64, l: f64) -> Result<DensityKernel> {
    if !(r > 0.0 && r <= 4.0) {
        return Err(Error::ParameterOutOfRange(
            "logistic parameter must lie in (0, 4]".into(),
        ));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::ParameterOutOfRange(
            "innovation scale must be positive and finite".into(),
        ));
    }
    if !(l > r / 4.0) {
        return Err(Error::ParameterOutOfRange(
            "window must contain the image of the logistic map".into(),
        ));
    }
    let z = (l - r / 4.0) / sigma;
    let tol = declared_tail_bound(z).min(1e-4).max(1e-9);
    let mean = move |x: f64| {
        let t = x.clamp(0.0, 1.0);
        r * t * (1.0 - t)
    };
    DensityKernel::new(
        move |x, y| gaussian_density(mean(x), sigma, y),
        move |x, rng| mean(x) + sigma * sample_normal_pair(rng).0,
        tol,
    )
}

/// Default truncation half-width for an AR(1) chain: eight invariant
/// standard deviations.
pub fn ar1_default_half_width(model: &Ar1Model) -> Result<f64> {
    let a2 = model.a * model.a;
    if a2 >= 1.0 {
        return Err(Error::NotContracting {
            a_abs: model.a.abs(),
        });
    }
    Ok(8.0 * model.sigma / (1.0 - a2).sqrt())
}

/// Builds the default grid chain of an AR(1) model (half-width
/// `8 sigma / sqrt(1 - a^2)` unless overridden).
pub fn ar1_grid(model: &Ar1Model, l: Option<f64>, m: usize) -> Result<GridChain> {
    let l = match l {
        Some(v) => v,
        None => ar1_default_half_width(model)?,
    };
    let kernel = ar1_kernel(model, l)?;
    discretize(&kernel, l, m)
}

/// Closed-form geometric drift of an AR(1) chain for `V(x) = x^2`:
/// `(L V)(x) = -(1 - a^2) x^2 + sigma^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ar1Drift {
    /// Drift rate `1 - a^2`.
    pub c: f64,
    /// Drift offset `sigma^2`.
    pub d: f64,
}

/// Closed-form drift certificate of an AR(1) model
/// ([`Error::NotContracting`] when `|a| >= 1`).
pub fn ar1_drift(model: &Ar1Model) -> Result<Ar1Drift> {
    let a2 = model.a * model.a;
    if a2 >= 1.0 {
        return Err(Error::NotContracting {
            a_abs: model.a.abs(),
        });
    }
    Ok(Ar1Drift {
        c: 1.0 - a2,
        d: model.sigma * model.sigma,
    })
}

/// A centered Gaussian law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianLaw {
    /// Mean.
    pub mean: f64,
    /// Variance.
    pub variance: f64,
}

impl GaussianLaw {
    /// Density at `y`.
    pub fn density(&self, y: f64) -> f64 {
        gaussian_density(self.mean, self.variance.sqrt(), y)
    }
}

/// Invariant law of a contracting AR(1) chain:
/// `N(0, sigma^2 / (1 - a^2))`.
pub fn ar1_invariant(model: &Ar1Model) -> Result<GaussianLaw> {
    let a2 = model.a * model.a;
    if a2 >= 1.0 {
        return Err(Error::NotContracting {
            a_abs: model.a.abs(),
        });
    }
    Ok(GaussianLaw {
        mean: 0.0,
        variance: model.sigma * model.sigma / (1.0 - a2),
    })
}

/// Continuous minorization of an AR(1) kernel on `K = [-sqrt(R),
/// sqrt(R)]`: the row infimum over `K` is attained at `x = +-sqrt(R)`, so
/// `nu(y)` is proportional to `phi_sigma(|y| + |a| sqrt(R))` on `K` and
/// `alpha` is its normalizing mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ar1Minorization {
    /// Sublevel radius for `V(x) = x^2`.
    pub r: f64,
    /// Half-width of the small interval `K`.
    pub sqrt_r: f64,
    /// Minorization mass (the quadrature value of the infimum integral).
    pub alpha: f64,
    a_abs: f64,
    sigma: f64,
}

impl Ar1Minorization {
    /// Density of the minorizing law at `y` (zero outside `K`).
    pub fn nu_density(&self, y: f64) -> f64 {
        if y.abs() > self.sqrt_r {
            return 0.0;
        }
        gaussian_density(0.0, self.sigma, y.abs() + self.a_abs * self.sqrt_r) / self.alpha
    }

    /// The unnormalized row infimum at `y`.
    pub fn infimum_density(&self, y: f64) -> f64 {
        if y.abs() > self.sqrt_r {
            return 0.0;
        }
        gaussian_density(0.0, self.sigma, y.abs() + self.a_abs * self.sqrt_r)
    }
}

/// Minorization certificate of an AR(1) kernel over the sublevel set of
/// `V(x) = x^2` at radius `R`; requires `R > 2 sigma^2 / (1 - a^2)`
/// strictly.
pub fn ar1_minorization(model: &Ar1Model, r: f64) -> Result<Ar1Minorization> {
    let a2 = model.a * model.a;
    if a2 >= 1.0 {
        return Err(Error::NotContracting {
            a_abs: model.a.abs(),
        });
    }
    let threshold = 2.0 * model.sigma * model.sigma / (1.0 - a2);
    if !(r > threshold) {
        return Err(Error::ParameterOutOfRange(format!(
            "R must exceed 2 sigma^2/(1-a^2) = {threshold}; got {r}"
        )));
    }
    let sqrt_r = r.sqrt();
    let a_abs = model.a.abs();
    let sigma = model.sigma;
    let alpha = simpson(
        |y| gaussian_density(0.0, sigma, y.abs() + a_abs * sqrt_r),
        -sqrt_r,
        sqrt_r,
        4096,
    );
    if !(alpha > 0.0) {
        return Err(Error::AlphaZero);
    }
    Ok(Ar1Minorization {
        r,
        sqrt_r,
        alpha,
        a_abs,
        sigma,
    })
}

/// Full continuous certificate pipeline for an AR(1) model: closed-form
/// drift, quadrature minorization at radius `R` (default
/// `4 sigma^2 / (1 - a^2)`), and the explicit contraction constants.
pub fn ar1_contraction(
    model: &Ar1Model,
    r: Option<f64>,
    alpha0: Option<f64>,
    gamma0: Option<f64>,
) -> Result<(Ar1Drift, Ar1Minorization, ContractionConstants)> {
    let drift = ar1_drift(model)?;
    let radius = r.unwrap_or(4.0 * model.sigma * model.sigma / (1.0 - model.a * model.a));
    let minor = ar1_minorization(model, radius)?;
    let constants = contraction_constants(drift.c, drift.d, radius, minor.alpha, alpha0, gamma0)?;
    Ok((drift, minor, constants))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lyapunov::generator_apply;

    fn standard_iid_kernel() -> DensityKernel {
        DensityKernel::new(
            |_x, y| gaussian_density(0.0, 1.0, y),
            |_x, rng| sample_normal_pair(rng).0,
            1e-6,
        )
        .unwrap()
    }

    #[test]
    fn iid_kernel_rows_identical_and_idempotent() {
        let chain = discretize(&standard_iid_kernel(), 8.0, 33).unwrap();
        let m = chain.nodes().len();
        for i in 1..m {
            for j in 0..m {
                assert_eq!(chain.matrix().get(0, j), chain.matrix().get(i, j), "{i} {j}");
            }
        }
        let one = nstep_density(&chain, 5, 1).unwrap();
        for n in [2u64, 5] {
            let later = nstep_density(&chain, 5, n).unwrap();
            for j in 0..m {
                assert!((later[j] - one[j]).abs() < 1e-12, "n {n} node {j}");
            }
        }
    }

    #[test]
    fn coarse_grid_reports_larger_defect() {
        let kernel = standard_iid_kernel();
        let coarse = discretize(&kernel, 8.0, 17).unwrap();
        let fine = discretize(&kernel, 8.0, 257).unwrap();
        let worst = |g: &GridChain| g.defects().iter().cloned().fold(0.0f64, f64::max);
        assert!(
            worst(&coarse) > worst(&fine),
            "coarse {} fine {}",
            worst(&coarse),
            worst(&fine)
        );
    }

    #[test]
    fn leaking_window_is_rejected() {
        let err = discretize(&standard_iid_kernel(), 3.0, 33).unwrap_err();
        match err {
            Error::TailMassTooLarge { defect, .. } => {
                assert!(defect > 1e-6, "defect {defect}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn one_step_density_is_kernel_row() {
        let model = Ar1Model::new(0.5, 1.0).unwrap();
        let chain = ar1_grid(&model, Some(8.0), 129).unwrap();
        let x = chain.node_nearest(1.0);
        let density = nstep_density(&chain, x, 1).unwrap();
        let mass: f64 = density
            .iter()
            .zip(chain.weights())
            .map(|(&d, &w)| d * w)
            .sum();
        assert!((mass - 1.0).abs() < 1e-12);
        // Row values are the renormalized kernel densities themselves.
        let sum: f64 = chain
            .nodes()
            .iter()
            .zip(chain.weights())
            .map(|(&y, &w)| w * gaussian_density(0.5, 1.0, y))
            .sum();
        for (j, &y) in chain.nodes().iter().enumerate() {
            let expect = gaussian_density(0.5, 1.0, y) / sum;
            assert!((density[j] - expect).abs() < 1e-10, "node {j}");
        }
    }

    #[test]
    fn nstep_matches_gaussian_convolution() {
        let model = Ar1Model::new(0.5, 1.0).unwrap();
        let chain = ar1_grid(&model, Some(8.0), 257).unwrap();
        let x_index = chain.node_nearest(1.0);
        assert!((chain.nodes()[x_index] - 1.0).abs() < 1e-12);
        let n = 5u64;
        let density = nstep_density(&chain, x_index, n).unwrap();
        let a = 0.5f64;
        let mean = a.powi(n as i32);
        let variance = (1.0 - a.powi(2 * n as i32)) / (1.0 - a * a);
        let mut sup = 0.0f64;
        for (j, &y) in chain.nodes().iter().enumerate() {
            let exact = gaussian_density(mean, variance.sqrt(), y);
            sup = sup.max((density[j] - exact).abs());
        }
        assert!(sup < 1e-4, "sup-norm {sup}");
    }

    #[test]
    fn central_row_sums_tight_before_normalization() {
        let model = Ar1Model::new(0.5, 1.0).unwrap();
        let chain = ar1_grid(&model, Some(8.0), 257).unwrap();
        let center = chain.node_nearest(0.0);
        assert!(chain.defects()[center] < 1e-8, "{}", chain.defects()[center]);
    }

    #[test]
    fn killed_rows_shrink_monotonically() {
        let model = Ar1Model::new(0.5, 1.0).unwrap();
        let chain = ar1_grid(&model, Some(8.0), 65).unwrap();
        let b: Vec<usize> = (0..chain.nodes().len())
            .filter(|&j| chain.nodes()[j].abs() <= 0.5)
            .collect();
        let powers = killed_kernel_powers(&chain, &b, 6).unwrap();
        let m = chain.nodes().len();
        for i in 0..m {
            let mut prev = 1.0f64;
            for (n, p) in powers.iter().enumerate() {
                let sum: f64 = (0..m).map(|j| p[(i, j)]).sum();
                assert!(sum <= prev + 1e-12, "row {i} power {n}");
                assert!((-1e-12..=1.0 + 1e-9).contains(&sum));
                prev = sum;
            }
        }
    }

    #[test]
    fn killing_everywhere_gives_zero_matrix() {
        let chain = discretize(&standard_iid_kernel(), 8.0, 17).unwrap();
        let all: Vec<usize> = (0..17).collect();
        let powers = killed_kernel_powers(&chain, &all, 1).unwrap();
        assert_eq!(powers[0].amax(), 0.0);
        let g = potential_kernel(&chain, &all, 1e-10).unwrap();
        assert_eq!(g.amax(), 0.0);
    }

    #[test]
    fn unreachable_target_diverges() {
        // The i.i.d. rows put essentially no mass on the far-left nodes,
        // so the killed chain survives forever.
        let kernel = DensityKernel::new(
            |_x, y| gaussian_density(5.0, 0.5, y),
            |_x, rng| 5.0 + 0.5 * sample_normal_pair(rng).0,
            1e-4,
        )
        .unwrap();
        let chain = discretize(&kernel, 8.0, 33).unwrap();
        let b: Vec<usize> = (0..chain.nodes().len())
            .filter(|&j| chain.nodes()[j] < -6.0)
            .collect();
        assert!(!b.is_empty());
        let err = potential_kernel(&chain, &b, 1e-10).unwrap_err();
        assert!(matches!(err, Error::SeriesDiverges { .. }));
    }

    #[test]
    fn ar1_closed_forms() {
        let m1 = Ar1Model::new(0.5, 1.0).unwrap();
        let d1 = ar1_drift(&m1).unwrap();
        assert_eq!(d1.c, 0.75);
        assert_eq!(d1.d, 1.0);
        let m2 = Ar1Model::new(0.0, 2.0).unwrap();
        let d2 = ar1_drift(&m2).unwrap();
        assert_eq!(d2.c, 1.0);
        assert_eq!(d2.d, 4.0);
        let m3 = Ar1Model::new(0.9, 0.1).unwrap();
        let d3 = ar1_drift(&m3).unwrap();
        assert!((d3.c - 0.19).abs() < 1e-15);
        assert_eq!(d3.d, 0.1 * 0.1);
        assert!(matches!(
            ar1_drift(&Ar1Model::new(1.0, 1.0).unwrap()),
            Err(Error::NotContracting { .. })
        ));
        let inv = ar1_invariant(&m1).unwrap();
        assert!((inv.variance - 4.0 / 3.0).abs() < 1e-15);
        let inv9 = ar1_invariant(&Ar1Model::new(0.9, 1.0).unwrap()).unwrap();
        assert!((inv9.variance - 100.0 / 19.0).abs() < 1e-12);
    }

    #[test]
    fn ar1_minorization_boundary_is_strict() {
        let model = Ar1Model::new(0.5, 1.0).unwrap();
        let boundary = 2.0 / 0.75;
        assert!(matches!(
            ar1_minorization(&model, boundary),
            Err(Error::ParameterOutOfRange(_))
        ));
        let minor = ar1_minorization(&model, 16.0 / 3.0).unwrap();
        assert!(minor.alpha > 0.0 && minor.alpha < 1.0, "{}", minor.alpha);
    }

    #[test]
    fn ar1_minorization_pointwise_on_grid() {
        let model = Ar1Model::new(0.5, 1.0).unwrap();
        let minor = ar1_minorization(&model, 16.0 / 3.0).unwrap();
        let k = 64;
        for i in 0..=k {
            let x = -minor.sqrt_r + 2.0 * minor.sqrt_r * i as f64 / k as f64;
            for j in 0..=k {
                let y = -minor.sqrt_r + 2.0 * minor.sqrt_r * j as f64 / k as f64;
                let p = gaussian_density(0.5 * x, 1.0, y);
                let bound = minor.alpha * minor.nu_density(y);
                assert!(p >= bound - 1e-12, "x {x} y {y}: {p} < {bound}");
            }
        }
    }

    #[test]
    fn ar1_minorization_iid_case_matches_plain_mass() {
        // For a = 0 the kernel ignores x, so alpha is just the Gaussian
        // mass of [-sqrt(R), sqrt(R)].
        let model = Ar1Model::new(0.0, 1.0).unwrap();
        let r = 4.0;
        let minor = ar1_minorization(&model, r).unwrap();
        let direct = simpson(|y| gaussian_density(0.0, 1.0, y), -2.0, 2.0, 4096);
        assert!((minor.alpha - direct).abs() < 1e-12);
    }

    #[test]
    fn ar1_contraction_defaults() {
        let model = Ar1Model::new(0.5, 1.0).unwrap();
        let (drift, minor, constants) = ar1_contraction(&model, None, None, None).unwrap();
        assert_eq!(drift.c, 0.75);
        assert!((minor.r - 16.0 / 3.0).abs() < 1e-12);
        assert!(constants.gamma_bar < 1.0);
        assert!(constants.m_bound.is_finite());
    }

    #[test]
    fn grid_generator_matches_closed_form_drift() {
        let model = Ar1Model::new(0.5, 1.0).unwrap();
        let l = ar1_default_half_width(&model).unwrap();
        let chain = ar1_grid(&model, None, 513).unwrap();
        let v: Vec<f64> = chain.nodes().iter().map(|&x| x * x).collect();
        let lv = generator_apply(chain.matrix(), &v).unwrap();
        for (i, &x) in chain.nodes().iter().enumerate() {
            if x.abs() <= l / 2.0 {
                let exact = -0.75 * x * x + 1.0;
                assert!(
                    (lv[i] - exact).abs() < 1e-5,
                    "x {x}: {} vs {exact}",
                    lv[i]
                );
            }
        }
    }

    #[test]
    fn default_half_width_formula() {
        let model = Ar1Model::new(0.5, 1.0).unwrap();
        let l = ar1_default_half_width(&model).unwrap();
        assert!((l - 8.0 / 0.75f64.sqrt()).abs() < 1e-12);
        assert!(matches!(
            ar1_default_half_width(&Ar1Model::new(1.0, 1.0).unwrap()),
            Err(Error::NotContracting { .. })
        ));
    }

    #[test]
    fn immediate_hit_when_interval_covers_window() {
        let model = Ar1Model::new(0.5, 1.0).unwrap();
        let kernel = ar1_kernel(&model, 8.0).unwrap();
        let base = RngStream::new(31, 0);
        let report =
            harris_diagnostics(&kernel, 2.0, (-100.0, 100.0), 10, 500, &base).unwrap();
        assert_eq!(report.hit_fraction, 1.0);
        assert_eq!(report.mean_hitting_estimate, Some(1.0));
        assert_eq!(report.censored, 0);
    }

    #[test]
    fn logistic_kernel_declares_and_passes() {
        let kernel = noisy_logistic_kernel(3.8, 0.1, 1.8).unwrap();
        let chain = discretize(&kernel, 1.8, 65).unwrap();
        assert_eq!(chain.nodes().len(), 65);
        assert!(matches!(
            noisy_logistic_kernel(3.8, 0.1, 0.9),
            Err(Error::ParameterOutOfRange(_))
        ));
    }
}
