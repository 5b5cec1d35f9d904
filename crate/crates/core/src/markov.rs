//! Finite-state chains: validated transition matrices, evolution of measures
//! and observables, communication structure, invariant laws, hitting times,
//! first-passage laws, and product-chain coupling.
//!
//! Measures act on the left (`mu P`), observables on the right (`P f`).
//! All matrices are dense and validated on construction: entries must be
//! nonnegative and every row must sum to 1 within a stated tolerance, after
//! which rows are renormalized to sum to exactly 1.

use nalgebra::{DMatrix, DVector};
use petgraph::graph::DiGraph;

use crate::rng::RngStream;
use crate::{Error, Result};

use rayon::prelude::*;

/// Default row-sum tolerance accepted by [`StochasticMatrix`] constructors.
pub const DEFAULT_ROW_TOL: f64 = 1e-9;

/// Residual tolerance enforced on computed invariant laws.
pub const INVARIANT_RESIDUAL_TOL: f64 = 1e-10;

/// Detailed-balance tolerance used when searching for a reversibility vector.
pub const DETAILED_BALANCE_TOL: f64 = 1e-9;

/// A validated row-stochastic matrix stored in row-major order.
///
/// # Examples
///
/// ```
/// use mcmclab_core::markov::StochasticMatrix;
/// let p = StochasticMatrix::from_rows(
///     &[vec![0.5, 0.5], vec![0.25, 0.75]],
///     1e-9,
/// )
/// .unwrap();
/// assert_eq!(p.n(), 2);
/// assert_eq!(p.get(1, 0), 0.25);
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    n: usize,
    rows: Vec<f64>,
}

impl StochasticMatrix {
    /// Validates `rows` as a square stochastic matrix.
    ///
    /// Entries must be nonnegative and each row sum must lie within
    /// `row_tol` of 1; accepted rows are renormalized to sum to exactly 1.
    pub fn from_rows(rows: &[Vec<f64>], row_tol: f64) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptySet);
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            let _ = i;
        }
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::from_flat(n, flat, row_tol)
    }

    /// Validates a row-major flat buffer of length `n * n`.
    pub fn from_flat(n: usize, mut rows: Vec<f64>, row_tol: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptySet);
        }
        if rows.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: rows.len(),
            });
        }
        for x in 0..n {
            for y in 0..n {
                let v = rows[x * n + y];
                if v < 0.0 || !v.is_finite() {
                    return Err(Error::NegativeEntry {
                        row: x,
                        col: y,
                        value: v,
                    });
                }
            }
        }
        for x in 0..n {
            let row = &mut rows[x * n..(x + 1) * n];
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > row_tol {
                return Err(Error::RowSumOutOfTolerance { row: x, sum });
            }
            renormalize_row(row);
        }
        Ok(StochasticMatrix { n, rows })
    }

    /// Validates a dense matrix (useful after products and powers).
    pub fn from_dmatrix(m: &DMatrix<f64>, row_tol: f64) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        let n = m.nrows();
        let mut rows = vec![0.0; n * n];
        for x in 0..n {
            for y in 0..n {
                rows[x * n + y] = m[(x, y)];
            }
        }
        Self::from_flat(n, rows, row_tol)
    }

    /// Identity matrix (each state absorbing).
    pub fn identity(n: usize) -> Self {
        let mut rows = vec![0.0; n * n];
        for x in 0..n {
            rows[x * n + x] = 1.0;
        }
        StochasticMatrix { n, rows }
    }

    /// Number of states.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Entry `p(x, y)`.
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.rows[x * self.n + y]
    }

    /// Row `x` as a slice (a probability vector).
    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x * self.n..(x + 1) * self.n]
    }

    /// Copies into a dense column-major matrix for linear algebra.
    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Validated product `self * other`.
    pub fn multiply(&self, other: &StochasticMatrix) -> Result<StochasticMatrix> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let prod = self.to_dmatrix() * other.to_dmatrix();
        Self::from_dmatrix(&prod, DEFAULT_ROW_TOL)
    }

    /// Validated matrix power by repeated squaring; `power(0)` is the
    /// identity.
    pub fn power(&self, k: u64) -> Result<StochasticMatrix> {
        if k == 0 {
            return Ok(StochasticMatrix::identity(self.n));
        }
        let mut base = self.to_dmatrix();
        let mut acc: Option<DMatrix<f64>> = None;
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(a) => a * &base,
                });
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        Self::from_dmatrix(&acc.expect("k > 0"), DEFAULT_ROW_TOL)
    }

    /// Restriction to a subset of states, renormalization-free.
    ///
    /// Valid only when the subset is closed (no row loses mass); validation
    /// rejects the result otherwise.
    pub fn restrict(&self, states: &[usize]) -> Result<StochasticMatrix> {
        if states.is_empty() {
            return Err(Error::EmptySet);
        }
        let m = states.len();
        let mut rows = vec![0.0; m * m];
        for (i, &x) in states.iter().enumerate() {
            for (j, &y) in states.iter().enumerate() {
                rows[i * m + j] = self.get(x, y);
            }
        }
        Self::from_flat(m, rows, DEFAULT_ROW_TOL)
    }
}

/// Renormalizes a nonnegative row to sum to exactly 1.0.
///
/// After dividing by the current sum, the remaining round-off is folded into
/// the largest entry until the recomputed sum equals 1.0 bit for bit.
fn renormalize_row(row: &mut [f64]) {
    let sum: f64 = row.iter().sum();
    if sum != 1.0 {
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    for _ in 0..8 {
        let s: f64 = row.iter().sum();
        if s == 1.0 {
            return;
        }
        let imax = row
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .expect("nonempty row");
        row[imax] += 1.0 - s;
    }
}

/// L1 distance between two vectors of equal length.
///
/// For probability vectors this is twice the total-variation distance.
pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "l1_distance needs equal lengths");
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Evolves a measure `n` steps: returns `mu P^n` computed stepwise.
///
/// # Examples
///
/// ```
/// use mcmclab_core::markov::{evolve_measure, StochasticMatrix};
/// let p = StochasticMatrix::from_rows(
///     &[vec![1.0 / 3.0, 2.0 / 3.0], vec![2.0 / 3.0, 1.0 / 3.0]],
///     1e-9,
/// )
/// .unwrap();
/// let out = evolve_measure(&[1.0, 0.0], &p, 2).unwrap();
/// assert!((out[0] - 5.0 / 9.0).abs() < 1e-15);
/// ```
pub fn evolve_measure(mu: &[f64], p: &StochasticMatrix, steps: u64) -> Result<Vec<f64>> {
    let n = p.n();
    if mu.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: mu.len(),
        });
    }
    let mut v = mu.to_vec();
    let mut next = vec![0.0; n];
    for _ in 0..steps {
        next.iter_mut().for_each(|t| *t = 0.0);
        for (x, &mass) in v.iter().enumerate() {
            if mass != 0.0 {
                let row = p.row(x);
                for (y, &pxy) in row.iter().enumerate() {
                    next[y] += mass * pxy;
                }
            }
        }
        std::mem::swap(&mut v, &mut next);
    }
    Ok(v)
}

/// Applies the kernel to an observable `n` times: returns `P^n f` computed
/// stepwise, so entry `x` is the expectation of `f` after `n` steps from `x`.
pub fn apply_to_function(p: &StochasticMatrix, f: &[f64], steps: u64) -> Result<Vec<f64>> {
    let n = p.n();
    if f.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: f.len(),
        });
    }
    let mut v = f.to_vec();
    let mut next = vec![0.0; n];
    for _ in 0..steps {
        for x in 0..n {
            next[x] = p.row(x).iter().zip(v.iter()).map(|(a, b)| a * b).sum();
        }
        std::mem::swap(&mut v, &mut next);
    }
    Ok(v)
}

/// Communication structure of a finite chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainStructureReport {
    /// Communication classes, each sorted, ordered by smallest member.
    pub classes: Vec<Vec<usize>>,
    /// Whether each class is closed (no transition leaves it).
    pub closed: Vec<bool>,
    /// Whether the chain has a single communication class.
    pub irreducible: bool,
    /// Period of each class; a class with no internal cycle reports 1.
    pub periods: Vec<usize>,
    /// Whether every class has period 1.
    pub aperiodic: bool,
    /// A positive vector `alpha` satisfying detailed balance
    /// `alpha(x) p(x,y) = alpha(y) p(y,x)` within tolerance, normalized to
    /// total mass 1, if one exists.
    pub reversible: Option<Vec<f64>>,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Classifies states into communication classes and reports closedness,
/// periods, and a detailed-balance vector when one exists.
pub fn classify(p: &StochasticMatrix) -> ChainStructureReport {
    let n = p.n();
    let mut graph = DiGraph::<(), ()>::new();
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    for x in 0..n {
        for y in 0..n {
            if p.get(x, y) > 0.0 {
                graph.add_edge(nodes[x], nodes[y], ());
            }
        }
    }
    let mut classes: Vec<Vec<usize>> = petgraph::algo::tarjan_scc(&graph)
        .into_iter()
        .map(|comp| {
            let mut states: Vec<usize> = comp.into_iter().map(|ix| ix.index()).collect();
            states.sort_unstable();
            states
        })
        .collect();
    classes.sort_by_key(|c| c[0]);

    let mut class_of = vec![0usize; n];
    for (ci, class) in classes.iter().enumerate() {
        for &x in class {
            class_of[x] = ci;
        }
    }

    let mut closed = Vec::with_capacity(classes.len());
    for (ci, class) in classes.iter().enumerate() {
        let mut is_closed = true;
        'outer: for &x in class {
            for y in 0..n {
                if p.get(x, y) > 0.0 && class_of[y] != ci {
                    is_closed = false;
                    break 'outer;
                }
            }
        }
        closed.push(is_closed);
    }

    let periods: Vec<usize> = classes
        .iter()
        .map(|class| class_period(p, class))
        .collect();
    let irreducible = classes.len() == 1;
    let aperiodic = periods.iter().all(|&d| d == 1);
    let reversible = detailed_balance_vector(p);

    ChainStructureReport {
        classes,
        closed,
        irreducible,
        periods,
        aperiodic,
        reversible,
    }
}

/// Period of one communication class: the gcd of cycle-length differences
/// collected along a breadth-first search of the class-internal edges.
fn class_period(p: &StochasticMatrix, class: &[usize]) -> usize {
    let n = p.n();
    let mut in_class = vec![false; n];
    for &x in class {
        in_class[x] = true;
    }
    let root = class[0];
    let mut level = vec![u64::MAX; n];
    level[root] = 0;
    let mut queue = std::collections::VecDeque::from([root]);
    while let Some(x) = queue.pop_front() {
        for y in 0..n {
            if in_class[y] && p.get(x, y) > 0.0 && level[y] == u64::MAX {
                level[y] = level[x] + 1;
                queue.push_back(y);
            }
        }
    }
    let mut g: u64 = 0;
    for &x in class {
        for &y in class.iter() {
            if p.get(x, y) > 0.0 {
                let diff = (level[x] as i64 + 1 - level[y] as i64).unsigned_abs();
                g = gcd(g, diff);
            }
        }
    }
    // A class without any internal cycle (for example a transient singleton
    // with no self-loop) collects no constraints; report period 1.
    if g == 0 {
        1
    } else {
        g as usize
    }
}

/// Searches for a positive detailed-balance vector by propagating ratios
/// along a spanning forest of the support graph, then verifying every pair.
fn detailed_balance_vector(p: &StochasticMatrix) -> Option<Vec<f64>> {
    let n = p.n();
    let mut alpha = vec![0.0f64; n];
    let mut visited = vec![false; n];
    for root in 0..n {
        if visited[root] {
            continue;
        }
        visited[root] = true;
        alpha[root] = 1.0;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(x) = queue.pop_front() {
            for y in 0..n {
                if y == x {
                    continue;
                }
                let fwd = p.get(x, y);
                let bwd = p.get(y, x);
                if fwd > 0.0 && bwd == 0.0 || fwd == 0.0 && bwd > 0.0 {
                    // One-way transitions break detailed balance outright.
                    return None;
                }
                if fwd > 0.0 && !visited[y] {
                    visited[y] = true;
                    alpha[y] = alpha[x] * fwd / bwd;
                    queue.push_back(y);
                }
            }
        }
    }
    let total: f64 = alpha.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return None;
    }
    for a in alpha.iter_mut() {
        *a /= total;
    }
    // Global verification catches inconsistent cycles the forest skipped.
    for x in 0..n {
        for y in (x + 1)..n {
            let lhs = alpha[x] * p.get(x, y);
            let rhs = alpha[y] * p.get(y, x);
            if (lhs - rhs).abs() > DETAILED_BALANCE_TOL {
                return None;
            }
        }
    }
    Some(alpha)
}

/// Invariant law of an irreducible chain by direct linear solve.
///
/// The stationarity system `pi (P - I) = 0` is closed with the normalization
/// row `sum(pi) = 1`, solved by full-pivot LU with one step of iterative
/// refinement. Fails with [`Error::SingularSystem`] if the residual
/// `|pi P - pi|_1` cannot be brought below [`INVARIANT_RESIDUAL_TOL`].
pub fn invariant_distribution(p: &StochasticMatrix) -> Result<Vec<f64>> {
    let report = classify(p);
    if !report.irreducible {
        return Err(Error::NotIrreducible);
    }
    let n = p.n();
    // Columns of A are the stationarity equations; the last is replaced by
    // the normalization constraint.
    let mut a = p.to_dmatrix().transpose() - DMatrix::<f64>::identity(n, n);
    for y in 0..n {
        a[(n - 1, y)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let lu = a.clone().full_piv_lu();
    let mut x = lu.solve(&b).ok_or(Error::SingularSystem)?;
    // One round of iterative refinement tightens the residual near round-off.
    let r = &b - &a * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    let mut pi: Vec<f64> = x.iter().copied().collect();
    for v in pi.iter_mut() {
        if *v < 0.0 {
            if *v < -1e-9 {
                return Err(Error::SingularSystem);
            }
            *v = 0.0;
        }
    }
    let total: f64 = pi.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::SingularSystem);
    }
    for v in pi.iter_mut() {
        *v /= total;
    }
    let image = evolve_measure(&pi, p, 1)?;
    if l1_distance(&image, &pi) > INVARIANT_RESIDUAL_TOL {
        return Err(Error::SingularSystem);
    }
    Ok(pi)
}

/// Residual `|pi P - pi|_1` of a candidate invariant law.
pub fn invariant_residual(p: &StochasticMatrix, pi: &[f64]) -> Result<f64> {
    let image = evolve_measure(pi, p, 1)?;
    Ok(l1_distance(&image, pi))
}

/// Mean return time to `x` for an irreducible chain: `1 / pi(x)`.
pub fn mean_return_time(p: &StochasticMatrix, x: usize) -> Result<f64> {
    let n = p.n();
    if x >= n {
        return Err(Error::DimensionMismatch { expected: n, got: x });
    }
    let pi = invariant_distribution(p)?;
    if pi[x] <= 0.0 {
        return Err(Error::ZeroPiEntry { state: x });
    }
    Ok(1.0 / pi[x])
}

/// Expected hitting times of the target set from every state.
///
/// Returns `h` with `h(y) = 0` on the target set and otherwise the solution
/// of `(I - Q) h = 1` on the complement, where `Q` is the kernel restricted
/// to the complement. States that cannot reach the target make the system
/// singular (the expectation is infinite) and are reported as
/// [`Error::SingularSystem`].
pub fn mean_hitting_times(p: &StochasticMatrix, targets: &[usize]) -> Result<Vec<f64>> {
    let n = p.n();
    if targets.is_empty() {
        return Err(Error::EmptyTargetSet);
    }
    let mut is_target = vec![false; n];
    for &t in targets {
        if t >= n {
            return Err(Error::DimensionMismatch { expected: n, got: t });
        }
        is_target[t] = true;
    }
    let others: Vec<usize> = (0..n).filter(|&y| !is_target[y]).collect();
    let mut h = vec![0.0; n];
    if others.is_empty() {
        return Ok(h);
    }
    let m = others.len();
    let a = DMatrix::<f64>::from_fn(m, m, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        delta - p.get(others[i], others[j])
    });
    let b = DVector::<f64>::from_element(m, 1.0);
    let lu = a.clone().full_piv_lu();
    let mut x = lu.solve(&b).ok_or(Error::SingularSystem)?;
    let r = &b - &a * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    let residual = (&b - &a * &x).abs().max();
    if !residual.is_finite() || residual > 1e-6 {
        return Err(Error::SingularSystem);
    }
    for (i, &y) in others.iter().enumerate() {
        if x[i] < 0.0 || !x[i].is_finite() {
            return Err(Error::SingularSystem);
        }
        h[y] = x[i];
    }
    Ok(h)
}

/// Probability of being absorbed in `target` (a member of the absorbing set)
/// from every state.
///
/// Every state in `absorbing` must carry a unit self-loop; `target` must be
/// one of them. Returns the vector of absorption probabilities.
pub fn absorption_probability(
    p: &StochasticMatrix,
    absorbing: &[usize],
    target: usize,
) -> Result<Vec<f64>> {
    let n = p.n();
    if absorbing.is_empty() {
        return Err(Error::EmptyTargetSet);
    }
    let mut is_absorbing = vec![false; n];
    for &s in absorbing {
        if s >= n {
            return Err(Error::DimensionMismatch { expected: n, got: s });
        }
        if (p.get(s, s) - 1.0).abs() > 1e-12 {
            return Err(Error::NotAbsorbing { state: s });
        }
        is_absorbing[s] = true;
    }
    if !is_absorbing.get(target).copied().unwrap_or(false) {
        return Err(Error::NotAbsorbing { state: target });
    }
    let transient: Vec<usize> = (0..n).filter(|&y| !is_absorbing[y]).collect();
    let mut h = vec![0.0; n];
    h[target] = 1.0;
    if transient.is_empty() {
        return Ok(h);
    }
    let m = transient.len();
    let a = DMatrix::<f64>::from_fn(m, m, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        delta - p.get(transient[i], transient[j])
    });
    let b = DVector::<f64>::from_fn(m, |i, _| p.get(transient[i], target));
    let lu = a.clone().full_piv_lu();
    let mut x = lu.solve(&b).ok_or(Error::SingularSystem)?;
    let r = &b - &a * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    for (i, &y) in transient.iter().enumerate() {
        if !x[i].is_finite() {
            return Err(Error::SingularSystem);
        }
        h[y] = x[i].clamp(0.0, 1.0);
    }
    Ok(h)
}

/// Law of the first passage time into a target set, truncated at a horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstPassageLaw {
    /// `probabilities[m - 1]` is the probability that the first visit to the
    /// target happens at step `m`, for `m = 1..=horizon`.
    pub probabilities: Vec<f64>,
    /// The truncation horizon.
    pub horizon: usize,
    /// Probability that the target is not reached by the horizon.
    pub residual: f64,
}

/// Computes the first-passage law into `targets` from `start` up to `horizon`
/// steps, by propagating the kernel with the target rows killed.
///
/// # Examples
///
/// ```
/// use mcmclab_core::markov::{first_passage_law, StochasticMatrix};
/// let p = StochasticMatrix::from_rows(
///     &[vec![1.0 / 3.0, 2.0 / 3.0], vec![2.0 / 3.0, 1.0 / 3.0]],
///     1e-9,
/// )
/// .unwrap();
/// let law = first_passage_law(&p, 0, &[0], 3).unwrap();
/// assert!((law.probabilities[0] - 1.0 / 3.0).abs() < 1e-15);
/// assert!((law.probabilities[1] - 4.0 / 9.0).abs() < 1e-15);
/// assert!((law.probabilities[2] - 4.0 / 27.0).abs() < 1e-15);
/// ```
pub fn first_passage_law(
    p: &StochasticMatrix,
    start: usize,
    targets: &[usize],
    horizon: usize,
) -> Result<FirstPassageLaw> {
    let n = p.n();
    if targets.is_empty() {
        return Err(Error::EmptyTargetSet);
    }
    if start >= n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: start,
        });
    }
    let mut in_target = vec![false; n];
    for &t in targets {
        if t >= n {
            return Err(Error::DimensionMismatch { expected: n, got: t });
        }
        in_target[t] = true;
    }
    // alive(y): mass that has reached y without touching the target yet.
    let mut alive = vec![0.0; n];
    alive[start] = 1.0;
    let mut probabilities = Vec::with_capacity(horizon);
    let mut next = vec![0.0; n];
    for _ in 0..horizon {
        let mut hit = 0.0;
        next.iter_mut().for_each(|t| *t = 0.0);
        for (x, &mass) in alive.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for (y, &pxy) in p.row(x).iter().enumerate() {
                if pxy == 0.0 {
                    continue;
                }
                if in_target[y] {
                    hit += mass * pxy;
                } else {
                    next[y] += mass * pxy;
                }
            }
        }
        probabilities.push(hit);
        std::mem::swap(&mut alive, &mut next);
    }
    let residual = alive.iter().sum();
    Ok(FirstPassageLaw {
        probabilities,
        horizon,
        residual,
    })
}

/// Tail estimates for the meeting time of an independent product coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingReport {
    /// `tail[k]` estimates the probability that the two coordinates have not
    /// met strictly after step `k`, for `k = 0..=n_max`.
    pub tail: Vec<f64>,
    /// Binomial standard error of each tail estimate.
    pub std_err: Vec<f64>,
    /// Number of simulated replicas.
    pub replicas: usize,
}

/// Simulates the product coupling `(X, Y)` with `X_0 ~ nu`, `Y_0 ~ pi`,
/// both coordinates moved independently by `p`, and estimates the tail of
/// the first meeting time.
///
/// Replica `r` draws from `base.substream(r)`, so results do not depend on
/// the thread schedule.
pub fn coupling_diagonal_time(
    p: &StochasticMatrix,
    nu: &[f64],
    pi: &[f64],
    n_max: usize,
    replicas: usize,
    base: &RngStream,
) -> Result<CouplingReport> {
    let n = p.n();
    if nu.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: nu.len(),
        });
    }
    if pi.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: pi.len(),
        });
    }
    if replicas == 0 {
        return Err(Error::ParameterOutOfRange(
            "replicas must be positive".into(),
        ));
    }
    // Meeting time per replica, censored at n_max + 1.
    let censor = n_max + 1;
    let taus: Vec<usize> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = base.substream(r as u64);
            let mut x = rng.choose_weighted(nu);
            let mut y = rng.choose_weighted(pi);
            if x == y {
                return 0;
            }
            for step in 1..=n_max {
                x = rng.choose_weighted(p.row(x));
                y = rng.choose_weighted(p.row(y));
                if x == y {
                    return step;
                }
            }
            censor
        })
        .collect();
    let mut exceed = vec![0u64; n_max + 1];
    for &tau in &taus {
        // tau > k for all k < tau.
        for (k, slot) in exceed.iter_mut().enumerate() {
            if tau > k {
                *slot += 1;
            }
        }
    }
    let r = replicas as f64;
    let tail: Vec<f64> = exceed.iter().map(|&c| c as f64 / r).collect();
    let std_err: Vec<f64> = tail.iter().map(|&q| (q * (1.0 - q) / r).sqrt()).collect();
    Ok(CouplingReport {
        tail,
        std_err,
        replicas,
    })
}
