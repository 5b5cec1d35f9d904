//! Spectral analysis of stochastic matrices: full spectra, spectral radius
//! on the complement of the invariant direction, Dunford power
//! reconstruction from spectral projectors, and the reversible convergence
//! machinery in the pi-weighted inner product.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::eigen::EigenDecomposition;
use crate::markov::{self, StochasticMatrix};
use crate::rng::RngStream;
use crate::{Error, Result};

/// Tolerance within which an eigenvalue counts as sitting on the unit
/// circle, and within which the leading eigenvalue must equal 1.
pub const UNIT_CIRCLE_TOL: f64 = 1e-8;

/// Eigenvalues within this distance are clustered into one spectral
/// projector.
pub const CLUSTER_TOL: f64 = 1e-6;

/// Condition-number ceiling beyond which the eigenbasis is rejected.
pub const MAX_EIGENBASIS_COND: f64 = 1e8;

/// Full spectral picture of an irreducible chain.
#[derive(Debug, Clone)]
pub struct SpectralReport {
    /// All eigenvalues with multiplicity, sorted by decreasing modulus
    /// (ties by decreasing real then imaginary part).
    pub eigenvalues: Vec<Complex64>,
    /// Largest modulus among eigenvalues other than the leading 1.
    pub rho: f64,
    /// Spectral gap `1 - rho`.
    pub gap: f64,
    /// Invariant law.
    pub pi: Vec<f64>,
    /// Number of eigenvalues on the unit circle; equals the period.
    pub unit_modulus_count: usize,
    /// Rank-one projector onto the invariant direction, `1 pi` (every row
    /// equals `pi`).
    pub pi0: DMatrix<f64>,
}

fn sorted_eigenvalues(dec: &EigenDecomposition) -> Vec<Complex64> {
    let mut vals = dec.eigenvalues();
    vals.sort_by(|a, b| {
        b.norm()
            .total_cmp(&a.norm())
            .then(b.re.total_cmp(&a.re))
            .then(b.im.total_cmp(&a.im))
    });
    vals
}

/// Computes eigenvalues, spectral radius, gap, invariant law, and the
/// rank-one invariant projector of an irreducible chain.
///
/// The leading eigenvalue must be 1 within [`UNIT_CIRCLE_TOL`] and unique at
/// that tolerance; the number of unit-modulus eigenvalues is checked against
/// the period of the chain.
pub fn full_spectrum(p: &StochasticMatrix) -> Result<SpectralReport> {
    let pi = markov::invariant_distribution(p)?;
    let dec = EigenDecomposition::new(&p.to_dmatrix())?;
    let eigenvalues = sorted_eigenvalues(&dec);
    let n = p.n();
    for l in &eigenvalues {
        if l.norm() > 1.0 + UNIT_CIRCLE_TOL {
            return Err(Error::EigensolverFailure);
        }
    }
    // Exactly one eigenvalue may sit within tolerance of 1.
    let mut dist: Vec<f64> = eigenvalues
        .iter()
        .map(|l| (l - Complex64::new(1.0, 0.0)).norm())
        .collect();
    let lead = dist
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("nonempty spectrum");
    if dist[lead] > UNIT_CIRCLE_TOL {
        return Err(Error::EigensolverFailure);
    }
    dist[lead] = f64::INFINITY;
    if dist.iter().any(|&d| d <= UNIT_CIRCLE_TOL) {
        // A second eigenvalue at 1 contradicts irreducibility.
        return Err(Error::EigensolverFailure);
    }
    let rho = eigenvalues
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != lead)
        .map(|(_, l)| l.norm())
        .fold(0.0f64, f64::max);
    let unit_modulus_count = eigenvalues
        .iter()
        .filter(|l| l.norm() >= 1.0 - UNIT_CIRCLE_TOL)
        .count();
    let period = markov::classify(p).periods[0];
    if unit_modulus_count != period {
        return Err(Error::EigensolverFailure);
    }
    let pi0 = DMatrix::from_fn(n, n, |_, j| pi[j]);
    Ok(SpectralReport {
        eigenvalues,
        rho,
        gap: 1.0 - rho,
        pi,
        unit_modulus_count,
        pi0,
    })
}

fn one_norm(m: &DMatrix<Complex64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0f64, f64::max)
}

fn cpow(z: Complex64, mut e: u64) -> Complex64 {
    let mut base = z;
    let mut acc = Complex64::new(1.0, 0.0);
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        e >>= 1;
        if e > 0 {
            base *= base;
        }
    }
    acc
}

/// Eigenbasis with its inverse and 1-norm condition number.
struct Eigenbasis {
    values: Vec<Complex64>,
    s: DMatrix<Complex64>,
    s_inv: DMatrix<Complex64>,
}

fn eigenbasis(p: &StochasticMatrix) -> Result<Eigenbasis> {
    let dec = EigenDecomposition::new(&p.to_dmatrix())?;
    let n = p.n();
    let mut s = dec.eigenvector_matrix();
    // Normalize each column in sup norm to tame the condition number.
    for j in 0..n {
        let scale = s.column(j).iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        if scale == 0.0 {
            return Err(Error::NonDiagonalizable { cond: f64::INFINITY });
        }
        for i in 0..n {
            s[(i, j)] /= Complex64::new(scale, 0.0);
        }
    }
    let s_inv = s
        .clone()
        .full_piv_lu()
        .try_inverse()
        .ok_or(Error::NonDiagonalizable { cond: f64::INFINITY })?;
    let cond = one_norm(&s) * one_norm(&s_inv);
    if !cond.is_finite() || cond > MAX_EIGENBASIS_COND {
        return Err(Error::NonDiagonalizable { cond });
    }
    Ok(Eigenbasis {
        values: dec.eigenvalues(),
        s,
        s_inv,
    })
}

/// Computes `P^n` through the spectral decomposition `S diag(lambda^n)
/// S^{-1}`.
///
/// Fails with [`Error::NonDiagonalizable`] when the eigenbasis condition
/// number exceeds [`MAX_EIGENBASIS_COND`]; callers should fall back to
/// direct powering in that case. `n = 0` returns the identity.
pub fn dunford_power(p: &StochasticMatrix, n: u64) -> Result<DMatrix<f64>> {
    let basis = eigenbasis(p)?;
    let dim = p.n();
    if n == 0 {
        return Ok(DMatrix::identity(dim, dim));
    }
    let powers = DVector::from_iterator(dim, basis.values.iter().map(|&l| cpow(l, n)));
    let lam = DMatrix::from_diagonal(&powers);
    let full = &basis.s * lam * &basis.s_inv;
    Ok(full.map(|z| z.re))
}

/// One spectral projector of a diagonalizable chain.
#[derive(Debug, Clone)]
pub struct SpectralProjector {
    /// Representative eigenvalue of the cluster.
    pub eigenvalue: Complex64,
    /// Number of eigenvalues merged into this cluster.
    pub multiplicity: usize,
    /// The projector onto the cluster's spectral subspace.
    pub projector: DMatrix<Complex64>,
}

/// Spectral projectors of a diagonalizable chain, one per eigenvalue
/// cluster (eigenvalues within [`CLUSTER_TOL`] are merged), sorted by
/// decreasing modulus.
///
/// The projectors satisfy `Pi_j Pi_k = delta_jk Pi_j` and sum to the
/// identity; `P^n` equals the sum of `lambda_j^n Pi_j`.
pub fn spectral_projectors(p: &StochasticMatrix) -> Result<Vec<SpectralProjector>> {
    let basis = eigenbasis(p)?;
    let n = p.n();
    let mut assigned = vec![false; n];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        // Grow the cluster transitively.
        let mut members = vec![i];
        assigned[i] = true;
        let mut cursor = 0;
        while cursor < members.len() {
            let a = members[cursor];
            for (j, was) in assigned.iter_mut().enumerate() {
                if !*was && (basis.values[a] - basis.values[j]).norm() <= CLUSTER_TOL {
                    *was = true;
                    members.push(j);
                }
            }
            cursor += 1;
        }
        clusters.push(members);
    }
    let mut out = Vec::with_capacity(clusters.len());
    for members in clusters {
        let mean = members
            .iter()
            .map(|&i| basis.values[i])
            .sum::<Complex64>()
            / Complex64::new(members.len() as f64, 0.0);
        let mut selector = DMatrix::<Complex64>::zeros(n, n);
        for &i in &members {
            selector[(i, i)] = Complex64::new(1.0, 0.0);
        }
        let projector = &basis.s * selector * &basis.s_inv;
        out.push(SpectralProjector {
            eigenvalue: mean,
            multiplicity: members.len(),
            projector,
        });
    }
    out.sort_by(|a, b| {
        b.eigenvalue
            .norm()
            .total_cmp(&a.eigenvalue.norm())
            .then(b.eigenvalue.re.total_cmp(&a.eigenvalue.re))
            .then(b.eigenvalue.im.total_cmp(&a.eigenvalue.im))
    });
    Ok(out)
}

/// Spectral convergence bound for a reversible chain next to the exact
/// deviation it dominates.
#[derive(Debug, Clone, PartialEq)]
pub struct ReversibleBound {
    /// The certified bound `rho^n |f|_inf |nu - pi|_1^{1/2}
    /// sup|nu/pi - 1|^{1/2}`.
    pub bound: f64,
    /// The exact deviation `|E_nu[f(X_n)] - pi(f)|`.
    pub exact: f64,
    /// Spectral radius used in the bound.
    pub rho: f64,
}

/// Evaluates the reversible convergence bound and the exact deviation after
/// `n` steps from initial law `nu` for observable `f`.
pub fn reversible_convergence_bound(
    p: &StochasticMatrix,
    nu: &[f64],
    f: &[f64],
    n: u64,
) -> Result<ReversibleBound> {
    let dim = p.n();
    if nu.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: nu.len(),
        });
    }
    if f.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: f.len(),
        });
    }
    let report = markov::classify(p);
    if !report.irreducible {
        return Err(Error::NotIrreducible);
    }
    let pi = report.reversible.ok_or(Error::NotReversible)?;
    for (x, &px) in pi.iter().enumerate() {
        if px <= 0.0 {
            return Err(Error::ZeroPiEntry { state: x });
        }
    }
    let rho = full_spectrum(p)?.rho;
    let f_inf = f.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
    let l1 = markov::l1_distance(nu, &pi);
    let ratio = nu
        .iter()
        .zip(&pi)
        .map(|(&nx, &px)| (nx / px - 1.0).abs())
        .fold(0.0f64, f64::max);
    let bound = rho.powi(n as i32) * f_inf * l1.sqrt() * ratio.sqrt();
    let mu = markov::evolve_measure(nu, p, n)?;
    let expect = |m: &[f64]| m.iter().zip(f).map(|(a, b)| a * b).sum::<f64>();
    let exact = (expect(&mu) - expect(&pi)).abs();
    Ok(ReversibleBound { bound, exact, rho })
}

/// Bounds on the distance between a uniform initial law on a subset and the
/// invariant law, next to the exact quantities they dominate.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformNuBounds {
    /// Invariant mass outside the subset.
    pub delta: f64,
    /// Spread of the invariant law on the subset:
    /// `max pi / min pi - 1`.
    pub c: f64,
    /// Bound `2 delta + c` on `|nu - pi|_1`.
    pub l1_bound: f64,
    /// Bound `max{1, (c + delta) / (1 - delta)}` on `sup|nu/pi - 1|`.
    ///
    /// Both sides of the sup are controlled by the extremal values of `pi`
    /// on the subset: `min pi >= (1 - delta) / ((1 + c) |X0|)` gives the
    /// upward side `(c + delta) / (1 - delta)`, and the downward side never
    /// exceeds 1.
    pub ratio_bound: f64,
    /// Exact `|nu - pi|_1`.
    pub l1_exact: f64,
    /// Exact `sup|nu/pi - 1|` over states carrying invariant mass.
    pub ratio_exact: f64,
}

/// Computes distance bounds for the uniform law on `x0` against `pi`,
/// together with the exact distances.
pub fn uniform_nu_bounds(pi: &[f64], x0: &[usize]) -> Result<UniformNuBounds> {
    if x0.is_empty() {
        return Err(Error::EmptySet);
    }
    let n = pi.len();
    let mut inside = vec![false; n];
    for &x in x0 {
        if x >= n {
            return Err(Error::DimensionMismatch { expected: n, got: x });
        }
        if pi[x] <= 0.0 {
            return Err(Error::ZeroPiEntry { state: x });
        }
        inside[x] = true;
    }
    let size = inside.iter().filter(|&&b| b).count();
    let mass: f64 = (0..n).filter(|&x| inside[x]).map(|x| pi[x]).sum();
    let delta = 1.0 - mass;
    let pmin = (0..n)
        .filter(|&x| inside[x])
        .map(|x| pi[x])
        .fold(f64::INFINITY, f64::min);
    let pmax = (0..n)
        .filter(|&x| inside[x])
        .map(|x| pi[x])
        .fold(0.0f64, f64::max);
    let c = pmax / pmin - 1.0;
    let uniform = 1.0 / size as f64;
    let l1_exact: f64 = (0..n)
        .map(|x| {
            let nu = if inside[x] { uniform } else { 0.0 };
            (nu - pi[x]).abs()
        })
        .sum();
    let ratio_exact = (0..n)
        .filter(|&x| pi[x] > 0.0)
        .map(|x| {
            let nu = if inside[x] { uniform } else { 0.0 };
            (nu / pi[x] - 1.0).abs()
        })
        .fold(0.0f64, f64::max);
    Ok(UniformNuBounds {
        delta,
        c,
        l1_bound: 2.0 * delta + c,
        ratio_bound: 1.0f64.max((c + delta) / (1.0 - delta)),
        l1_exact,
        ratio_exact,
    })
}

/// Lower estimate of the spectral radius on the complement of the invariant
/// direction, for a reversible chain.
///
/// Random probes orthogonal to the constant direction in the pi-weighted
/// inner product are driven by power iteration; the largest weighted
/// Rayleigh quotient and norm-growth ratio observed, refined by a two-point
/// Rayleigh-Ritz step, give an estimate that never exceeds the true radius
/// (up to round-off) and converges to it from below as the spectrum
/// separates.
pub fn rayleigh_rho(p: &StochasticMatrix, trials: usize, rng: &mut RngStream) -> Result<f64> {
    let report = markov::classify(p);
    let pi = report.reversible.ok_or(Error::NotReversible)?;
    let n = p.n();
    if n == 1 {
        return Ok(0.0);
    }
    let dot = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .zip(&pi)
            .map(|((x, y), w)| x * y * w)
            .sum()
    };
    let project = |v: &mut [f64]| {
        // Remove the component along the constant vector; <1,1>_pi = 1.
        let s: f64 = v.iter().zip(&pi).map(|(x, w)| x * w).sum();
        for e in v.iter_mut() {
            *e -= s;
        }
    };
    let step = |v: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|x| p.row(x).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    };
    let mut best: f64 = 0.0;
    for _ in 0..trials.max(1) {
        let mut v: Vec<f64> = (0..n).map(|_| rng.next_f64() * 2.0 - 1.0).collect();
        project(&mut v);
        let mut nv = dot(&v, &v);
        if nv <= 0.0 {
            continue;
        }
        let mut stable = 0u32;
        let mut last_ratio = -1.0f64;
        for _ in 0..1500 {
            let mut w = step(&v);
            project(&mut w);
            let nw = dot(&w, &w);
            if nw <= 0.0 || !nw.is_finite() {
                break;
            }
            let quotient = (dot(&v, &w) / nv).abs();
            let ratio = (nw / nv).sqrt();
            best = best.max(quotient).max(ratio);
            if (ratio - last_ratio).abs() < 1e-14 {
                stable += 1;
                if stable > 10 {
                    break;
                }
            } else {
                stable = 0;
            }
            last_ratio = ratio;
            let scale = 1.0 / nw.sqrt();
            v = w.into_iter().map(|x| x * scale).collect();
            nv = 1.0;
        }
        // Two-point Rayleigh-Ritz on span{v, P v} captures symmetric
        // eigenvalue pairs that plain power iteration straddles.
        let mut w = step(&v);
        project(&mut w);
        let b1: Vec<f64> = {
            let s = dot(&v, &v).sqrt();
            if s == 0.0 {
                continue;
            }
            v.iter().map(|x| x / s).collect()
        };
        let along = dot(&w, &b1);
        let mut b2: Vec<f64> = w.iter().zip(&b1).map(|(x, y)| x - along * y).collect();
        let nb2 = dot(&b2, &b2).sqrt();
        if nb2 > 1e-12 {
            for e in b2.iter_mut() {
                *e /= nb2;
            }
            let pb1 = {
                let mut t = step(&b1);
                project(&mut t);
                t
            };
            let pb2 = {
                let mut t = step(&b2);
                project(&mut t);
                t
            };
            let t11 = dot(&b1, &pb1);
            let t22 = dot(&b2, &pb2);
            let t12 = 0.5 * (dot(&b1, &pb2) + dot(&b2, &pb1));
            let mid = 0.5 * (t11 + t22);
            let rad = (0.25 * (t11 - t22) * (t11 - t22) + t12 * t12).sqrt();
            best = best.max((mid + rad).abs()).max((mid - rad).abs());
        }
    }
    Ok(best)
}
