//! Concrete chains with exact analytic identities: Ehrenfest urns, the
//! magnetization chain, the mad knight, cycle walks, the simple walk on the
//! integers, the one-dimensional Ising circle with its droplet coarse
//! graining, and bigram text chains.

use crate::markov::StochasticMatrix;
use crate::rng::RngStream;
use crate::{Error, Result};

const ROW_TOL: f64 = 1e-9;

/// Ehrenfest urn chain on `{0..N}`: with `x` balls in the left urn a
/// uniformly chosen ball switches urns, so `p(x, x-1) = x/N` and
/// `p(x, x+1) = (N-x)/N`. The invariant law is Binomial(N, 1/2).
pub fn ehrenfest_matrix(n: usize) -> Result<StochasticMatrix> {
    if n < 1 {
        return Err(Error::ParameterOutOfRange(
            "Ehrenfest chain needs at least one ball".into(),
        ));
    }
    let mut rows = vec![vec![0.0; n + 1]; n + 1];
    for x in 0..=n {
        if x > 0 {
            rows[x][x - 1] = x as f64 / n as f64;
        }
        if x < n {
            rows[x][x + 1] = (n - x) as f64 / n as f64;
        }
    }
    StochasticMatrix::from_rows(&rows, ROW_TOL)
}

/// Magnetization chain of the free Ising circle on `m` in
/// `{-N, -N+2, ..., N}` (state index `i` holds `m = 2i - N`):
/// `p(m, m+2) = 1/2 - m/(2N)` and `p(m, m-2) = 1/2 + m/(2N)`.
///
/// Entries are evaluated in the form `(N-i)/N` and `i/N` so the relabeling
/// `i = (m+N)/2` reproduces [`ehrenfest_matrix`] bit for bit.
pub fn magnetization_chain(n: usize) -> Result<StochasticMatrix> {
    if n < 2 {
        return Err(Error::ParameterOutOfRange(
            "magnetization chain needs at least two spins".into(),
        ));
    }
    let mut rows = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..=n {
        if i > 0 {
            rows[i][i - 1] = i as f64 / n as f64;
        }
        if i < n {
            rows[i][i + 1] = (n - i) as f64 / n as f64;
        }
    }
    StochasticMatrix::from_rows(&rows, ROW_TOL)
}

/// Number of legal knight moves from each square of the 8x8 board,
/// rank-major (square `8*rank + file`).
pub fn knight_degrees() -> Vec<u32> {
    const JUMPS: [(i32, i32); 8] = [
        (1, 2),
        (2, 1),
        (-1, 2),
        (-2, 1),
        (1, -2),
        (2, -1),
        (-1, -2),
        (-2, -1),
    ];
    let mut deg = Vec::with_capacity(64);
    for rank in 0..8i32 {
        for file in 0..8i32 {
            let count = JUMPS
                .iter()
                .filter(|&&(dr, df)| {
                    (0..8).contains(&(rank + dr)) && (0..8).contains(&(file + df))
                })
                .count();
            deg.push(count as u32);
        }
    }
    deg
}

/// The mad knight: from each square of the chessboard a legal knight move
/// is chosen uniformly. States are rank-major (`8*rank + file`); the chain
/// is reversible with invariant law proportional to the move counts, whose
/// total over the board is 336.
pub fn knight_chain() -> StochasticMatrix {
    const JUMPS: [(i32, i32); 8] = [
        (1, 2),
        (2, 1),
        (-1, 2),
        (-2, 1),
        (1, -2),
        (2, -1),
        (-1, -2),
        (-2, -1),
    ];
    let mut rows = vec![vec![0.0; 64]; 64];
    for rank in 0..8i32 {
        for file in 0..8i32 {
            let from = (8 * rank + file) as usize;
            let targets: Vec<usize> = JUMPS
                .iter()
                .filter_map(|&(dr, df)| {
                    let (r, f) = (rank + dr, file + df);
                    ((0..8).contains(&r) && (0..8).contains(&f))
                        .then(|| (8 * r + f) as usize)
                })
                .collect();
            let w = 1.0 / targets.len() as f64;
            for to in targets {
                rows[from][to] = w;
            }
        }
    }
    StochasticMatrix::from_rows(&rows, ROW_TOL).expect("knight rows are stochastic")
}

/// Nearest-neighbour walk on the discrete circle `Z/NZ`:
/// `p(x, x+1) = p` and `p(x, x-1) = 1-p`. Doubly stochastic, so the
/// invariant law is uniform; for `p = 1/2` the eigenvalues are
/// `cos(2 pi k / N)`.
pub fn cycle_walk(n: usize, p: f64) -> Result<StochasticMatrix> {
    if n < 3 {
        return Err(Error::ParameterOutOfRange(
            "cycle walk needs at least three sites".into(),
        ));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::ParameterOutOfRange(
            "cycle walk step probability must lie in (0, 1)".into(),
        ));
    }
    let mut rows = vec![vec![0.0; n]; n];
    for x in 0..n {
        rows[x][(x + 1) % n] = p;
        rows[x][(x + n - 1) % n] = 1.0 - p;
    }
    StochasticMatrix::from_rows(&rows, ROW_TOL)
}

fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    if n <= 4096 {
        (2..=n).map(|k| (k as f64).ln()).sum()
    } else {
        // Stirling series with three correction terms.
        let x = n as f64;
        x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln() + 1.0 / (12.0 * x)
            - 1.0 / (360.0 * x.powi(3))
    }
}

/// Law of the symmetric walk on the integers after `n` steps from 0:
/// `P(X_n = x) = 2^-n binom(n, (n+x)/2)`, evaluated through
/// log-factorials; 0 when `|x| > n` or the parity of `x` differs from `n`.
pub fn z_walk_law(n: u64, x: i64) -> f64 {
    let n_i = n as i64;
    if x.abs() > n_i || (x - n_i).rem_euclid(2) != 0 {
        return 0.0;
    }
    let k = ((n_i + x) / 2) as u64;
    let log_p = ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
        - n as f64 * std::f64::consts::LN_2;
    log_p.exp()
}

/// Ising model on the circle `Z/NZ` with inverse temperature `beta`,
/// external field `h`, and per-site flip rate `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    /// Number of spins on the circle.
    pub n: usize,
    /// Inverse temperature, nonnegative.
    pub beta: f64,
    /// External field in `(0, 1]`.
    pub h: f64,
    /// Per-site flip rate with `q N <= 1`.
    pub q: f64,
}

impl IsingModel {
    /// Builds a model; `q` defaults to `1/N`.
    pub fn new(n: usize, beta: f64, h: f64, q: Option<f64>) -> Result<IsingModel> {
        if n < 2 {
            return Err(Error::ParameterOutOfRange(
                "Ising circle needs at least two spins".into(),
            ));
        }
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::ParameterOutOfRange(
                "inverse temperature must be finite and nonnegative".into(),
            ));
        }
        if !(h > 0.0 && h <= 1.0) {
            return Err(Error::ParameterOutOfRange(
                "external field must lie in (0, 1]".into(),
            ));
        }
        let q = q.unwrap_or(1.0 / n as f64);
        if !(q > 0.0) || q * n as f64 > 1.0 + 1e-12 {
            return Err(Error::ParameterOutOfRange(
                "flip rate must satisfy 0 < qN <= 1".into(),
            ));
        }
        Ok(IsingModel { n, beta, h, q })
    }
}

/// A spin configuration: values in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinConfig {
    spins: Vec<i8>,
}

impl SpinConfig {
    /// Validates that every entry is -1 or +1.
    pub fn new(spins: Vec<i8>) -> Result<SpinConfig> {
        if spins.is_empty() {
            return Err(Error::ParameterOutOfRange(
                "spin configuration must be nonempty".into(),
            ));
        }
        if spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::ParameterOutOfRange(
                "spins must take values -1 or +1".into(),
            ));
        }
        Ok(SpinConfig { spins })
    }

    /// The all-plus configuration.
    pub fn all_plus(n: usize) -> SpinConfig {
        SpinConfig { spins: vec![1; n] }
    }

    /// The all-minus configuration.
    pub fn all_minus(n: usize) -> SpinConfig {
        SpinConfig { spins: vec![-1; n] }
    }

    /// Decodes the bits of `code` into spins (bit `k` set means spin `k`
    /// is up); enumerating `code` over `0..2^n` walks the whole state
    /// space.
    pub fn from_code(code: u64, n: usize) -> SpinConfig {
        let spins = (0..n)
            .map(|k| if code >> k & 1 == 1 { 1 } else { -1 })
            .collect();
        SpinConfig { spins }
    }

    /// Encodes the spins back into the code read by [`SpinConfig::from_code`].
    pub fn code(&self) -> u64 {
        self.spins
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == 1)
            .fold(0u64, |acc, (k, _)| acc | 1 << k)
    }

    /// Read-only view of the spins.
    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    /// Number of spins.
    pub fn len(&self) -> usize {
        self.spins.len()
    }

    /// True when there are no spins (never, for validated configurations).
    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    /// Flips spin `k` in place.
    pub fn flip(&mut self, k: usize) {
        self.spins[k] = -self.spins[k];
    }

    /// A copy with spin `k` flipped.
    pub fn flipped(&self, k: usize) -> SpinConfig {
        let mut c = self.clone();
        c.flip(k);
        c
    }

    /// Total magnetization `m = N_+ - N_-`.
    pub fn magnetization(&self) -> i64 {
        self.spins.iter().map(|&s| s as i64).sum()
    }

    /// Number of up spins.
    pub fn n_plus(&self) -> usize {
        self.spins.iter().filter(|&&s| s == 1).count()
    }

    /// Number of down spins.
    pub fn n_minus(&self) -> usize {
        self.spins.iter().filter(|&&s| s == -1).count()
    }

    /// Number of interfaces: circular bonds whose endpoints disagree.
    /// Always even on a circle.
    pub fn interfaces(&self) -> usize {
        let n = self.spins.len();
        (0..n)
            .filter(|&k| self.spins[k] != self.spins[(k + 1) % n])
            .count()
    }
}

/// Circle-form energy `H(x) = 2 I(x) - h m(x) - N` with `I` the interface
/// count and `m` the magnetization.
pub fn ising_energy(model: &IsingModel, x: &SpinConfig) -> f64 {
    assert_eq!(x.len(), model.n, "configuration size must match the model");
    let i2_minus_n = 2 * x.interfaces() as i64 - model.n as i64;
    i2_minus_n as f64 - model.h * x.magnetization() as f64
}

/// Bond-sum energy `-(sum_k x_k x_{k+1}) - h sum_k x_k` over circular
/// bonds; agrees with [`ising_energy`] exactly.
pub fn ising_energy_bond_sum(model: &IsingModel, x: &SpinConfig) -> f64 {
    assert_eq!(x.len(), model.n, "configuration size must match the model");
    let s = x.spins();
    let n = s.len();
    let bond_sum: i64 = (0..n).map(|k| s[k] as i64 * s[(k + 1) % n] as i64).sum();
    (-bond_sum) as f64 - model.h * x.magnetization() as f64
}

/// Energy increment for flipping spin `k`:
/// `Delta H = 2 x_k (x_{k-1} + x_{k+1} + h)` with circular indices.
pub fn ising_delta(model: &IsingModel, x: &SpinConfig, k: usize) -> f64 {
    assert_eq!(x.len(), model.n, "configuration size must match the model");
    assert!(k < model.n, "site index out of range");
    let s = x.spins();
    let n = s.len();
    let left = s[(k + n - 1) % n] as f64;
    let right = s[(k + 1) % n] as f64;
    2.0 * s[k] as f64 * ((left + right) + model.h)
}

/// Coarse droplet-growth chain of the low-temperature Ising circle on
/// `{0..N}`: state `y` is the length of the droplet of down spins.
///
/// Leaving the ground state costs the full activation factor
/// (`0 -> 1` with probability `e^{-beta (4-2h)}`, one interface pair
/// created); a length-1 droplet can vanish (`1 -> 0` with probability `q`)
/// or grow from either end (`1 -> 2` with probability `2q`); longer
/// droplets only grow (`y -> y+1` with probability `2q`), and `N` is
/// absorbing. Rows are completed by self-loops.
pub fn droplet_chain(n: usize, beta: f64, h: f64, q: f64) -> Result<StochasticMatrix> {
    if n < 3 {
        return Err(Error::ParameterOutOfRange(
            "droplet chain needs at least three spins".into(),
        ));
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::ParameterOutOfRange(
            "inverse temperature must be finite and nonnegative".into(),
        ));
    }
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::ParameterOutOfRange(
            "external field must lie in (0, 1]".into(),
        ));
    }
    if !(q > 0.0 && 3.0 * q <= 1.0) {
        return Err(Error::ParameterOutOfRange(
            "flip rate must satisfy 0 < 3q <= 1".into(),
        ));
    }
    let delta_h = 4.0 - 2.0 * h;
    let activation = (-beta * delta_h).exp();
    let mut rows = vec![vec![0.0; n + 1]; n + 1];
    rows[0][1] = activation;
    rows[0][0] = 1.0 - activation;
    rows[1][0] = q;
    rows[1][2] = 2.0 * q;
    rows[1][1] = 1.0 - 3.0 * q;
    for y in 2..n {
        rows[y][y + 1] = 2.0 * q;
        rows[y][y] = 1.0 - 2.0 * q;
    }
    rows[n][n] = 1.0;
    StochasticMatrix::from_rows(&rows, ROW_TOL)
}

/// The 60-symbol alphabet used by the text chains: both cases of the Latin
/// letters, the space, and the punctuation marks `. , ; : ' ! ?`.
pub fn standard_alphabet() -> Vec<char> {
    let mut a: Vec<char> = ('a'..='z').collect();
    a.extend('A'..='Z');
    a.push(' ');
    a.extend(['.', ',', ';', ':', '\'', '!', '?']);
    a
}

/// A bigram text model: symbol counts, the smoothed transition matrix, and
/// the unigram law used both as fallback row and as initial law.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusModel {
    /// Ordered alphabet; all other symbols are dropped when fitting.
    pub alphabet: Vec<char>,
    /// Bigram counts, row = predecessor symbol.
    pub counts: Vec<Vec<u64>>,
    /// Additive smoothing applied to every count.
    pub smoothing: f64,
    matrix: StochasticMatrix,
    unigram: Vec<f64>,
}

impl CorpusModel {
    /// The fitted transition matrix.
    pub fn matrix(&self) -> &StochasticMatrix {
        &self.matrix
    }

    /// Symbol frequencies of the filtered corpus.
    pub fn unigram(&self) -> &[f64] {
        &self.unigram
    }
}

/// Fits a bigram chain to `text` over `alphabet` with additive smoothing.
///
/// Symbols outside the alphabet are dropped; the filtered text must keep
/// at least two symbols ([`Error::EmptyCorpus`] otherwise). Row `i` of the
/// transition matrix is `(count(i,j) + smoothing) / (total_i + smoothing *
/// A)`; with zero smoothing, rows with no observations fall back to the
/// unigram law.
pub fn corpus_fit(text: &str, alphabet: &[char], smoothing: f64) -> Result<CorpusModel> {
    if alphabet.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if !(smoothing >= 0.0) || !smoothing.is_finite() {
        return Err(Error::ParameterOutOfRange(
            "smoothing must be finite and nonnegative".into(),
        ));
    }
    let a = alphabet.len();
    let index: std::collections::HashMap<char, usize> = alphabet
        .iter()
        .enumerate()
        .map(|(i, &ch)| (ch, i))
        .collect();
    let filtered: Vec<usize> = text.chars().filter_map(|ch| index.get(&ch).copied()).collect();
    if filtered.len() < 2 {
        return Err(Error::EmptyCorpus);
    }
    let mut counts = vec![vec![0u64; a]; a];
    for pair in filtered.windows(2) {
        counts[pair[0]][pair[1]] += 1;
    }
    let mut occur = vec![0u64; a];
    for &s in &filtered {
        occur[s] += 1;
    }
    let total = filtered.len() as f64;
    let unigram: Vec<f64> = occur.iter().map(|&c| c as f64 / total).collect();
    let mut rows = vec![vec![0.0; a]; a];
    for i in 0..a {
        let row_total: u64 = counts[i].iter().sum();
        let denom = row_total as f64 + smoothing * a as f64;
        if denom > 0.0 {
            for j in 0..a {
                rows[i][j] = (counts[i][j] as f64 + smoothing) / denom;
            }
        } else {
            rows[i].copy_from_slice(&unigram);
        }
    }
    let matrix = StochasticMatrix::from_rows(&rows, 1e-6)?;
    Ok(CorpusModel {
        alphabet: alphabet.to_vec(),
        counts,
        smoothing,
        matrix,
        unigram,
    })
}

/// Generates `length` symbols from a fitted bigram model, starting from
/// the unigram law.
pub fn corpus_generate(model: &CorpusModel, length: usize, rng: &mut RngStream) -> String {
    let mut out = String::with_capacity(length);
    if length == 0 {
        return out;
    }
    let mut state = rng.choose_weighted(model.unigram());
    out.push(model.alphabet[state]);
    for _ in 1..length {
        state = rng.choose_weighted(model.matrix.row(state));
        out.push(model.alphabet[state]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov;

    #[test]
    fn ehrenfest_three_balls_matches_figure() {
        let p = ehrenfest_matrix(3).unwrap();
        let expect = [
            [0.0, 1.0, 0.0, 0.0],
            [1.0 / 3.0, 0.0, 2.0 / 3.0, 0.0],
            [0.0, 2.0 / 3.0, 0.0, 1.0 / 3.0],
            [0.0, 0.0, 1.0, 0.0],
        ];
        for x in 0..4 {
            for y in 0..4 {
                assert!((p.get(x, y) - expect[x][y]).abs() < 1e-15, "{x} {y}");
            }
        }
    }

    #[test]
    fn ehrenfest_single_ball_flips() {
        let p = ehrenfest_matrix(1).unwrap();
        assert_eq!(p.get(0, 1), 1.0);
        assert_eq!(p.get(1, 0), 1.0);
        assert_eq!(p.get(0, 0), 0.0);
    }

    #[test]
    fn ehrenfest_binomial_reversible() {
        let n = 8;
        let p = ehrenfest_matrix(n).unwrap();
        let report = markov::classify(&p);
        let alpha = report.reversible.expect("chain is reversible");
        let mut binom = vec![0.0; n + 1];
        let mut c = 1.0;
        for k in 0..=n {
            binom[k] = c / 2f64.powi(n as i32);
            c = c * (n - k) as f64 / (k + 1) as f64;
        }
        for k in 0..=n {
            assert!((alpha[k] - binom[k]).abs() < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn magnetization_relabels_to_ehrenfest() {
        for n in [4usize, 6] {
            let m = magnetization_chain(n).unwrap();
            let e = ehrenfest_matrix(n).unwrap();
            for x in 0..=n {
                for y in 0..=n {
                    assert_eq!(m.get(x, y).to_bits(), e.get(x, y).to_bits(), "{n} {x} {y}");
                }
            }
        }
    }

    #[test]
    fn magnetization_balanced_state_is_symmetric() {
        let p = magnetization_chain(4).unwrap();
        // Index 2 holds m = 0.
        assert_eq!(p.get(2, 1), 0.5);
        assert_eq!(p.get(2, 3), 0.5);
    }

    #[test]
    fn magnetization_square_drift_constants() {
        let n = 16usize;
        let p = magnetization_chain(n).unwrap();
        let v: Vec<f64> = (0..=n).map(|i| ((2 * i as i64 - n as i64).pow(2)) as f64).collect();
        let cert = crate::lyapunov::fit_geometric_drift(&p, &v, 0.05).unwrap();
        assert!((cert.c - 4.0 / n as f64).abs() < 1e-12);
        assert!((cert.d - 4.0).abs() < 1e-12);
    }

    #[test]
    fn knight_degree_census() {
        let deg = knight_degrees();
        assert_eq!(deg.iter().sum::<u32>(), 336);
        assert_eq!(deg[0], 2);
        assert_eq!(deg[8 * 3 + 3], 8);
    }

    #[test]
    fn knight_reversible_with_degree_law() {
        let p = knight_chain();
        let report = markov::classify(&p);
        assert!(report.irreducible);
        assert_eq!(report.periods, vec![2]);
        let alpha = report.reversible.expect("degree vector balances");
        let deg = knight_degrees();
        for x in 0..64 {
            assert!((alpha[x] - deg[x] as f64 / 336.0).abs() < 1e-12, "{x}");
        }
        let ret = markov::mean_return_time(&p, 8 * 3 + 3).unwrap();
        assert!((ret - 42.0).abs() < 1e-9);
    }

    #[test]
    fn cycle_walk_uniform_invariant() {
        let p = cycle_walk(6, 0.7).unwrap();
        let pi = markov::invariant_distribution(&p).unwrap();
        for x in 0..6 {
            assert!((pi[x] - 1.0 / 6.0).abs() < 1e-12);
        }
        assert!(matches!(
            cycle_walk(2, 0.5),
            Err(Error::ParameterOutOfRange(_))
        ));
    }

    #[test]
    fn z_walk_law_small_values() {
        assert!((z_walk_law(2, 0) - 0.5).abs() < 1e-12);
        assert!((z_walk_law(3, 1) - 0.375).abs() < 1e-12);
        assert_eq!(z_walk_law(2, 1), 0.0);
        assert_eq!(z_walk_law(2, 5), 0.0);
        let total: f64 = (-10..=10).map(|x| z_walk_law(10, x)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        for x in 0..=7 {
            assert!((z_walk_law(7, x) - z_walk_law(7, -x)).abs() < 1e-15);
        }
    }

    #[test]
    fn ising_energy_identities() {
        let n = 8;
        let model = IsingModel::new(n, 1.0, 0.5, None).unwrap();
        let plus = SpinConfig::all_plus(n);
        let minus = SpinConfig::all_minus(n);
        assert_eq!(ising_energy(&model, &plus), -(n as f64) * 1.5);
        assert_eq!(ising_energy(&model, &minus), -(n as f64) * 0.5);
        let alternating =
            SpinConfig::new((0..n).map(|k| if k % 2 == 0 { 1 } else { -1 }).collect()).unwrap();
        assert_eq!(ising_energy(&model, &alternating), n as f64);
        assert_eq!(ising_delta(&model, &plus, 3), 4.0 + 2.0 * 0.5);
    }

    #[test]
    fn ising_energy_forms_agree_exactly() {
        let n = 8;
        let model = IsingModel::new(n, 0.7, 0.5, None).unwrap();
        for code in 0..1u64 << n {
            let x = SpinConfig::from_code(code, n);
            assert_eq!(
                ising_energy(&model, &x).to_bits(),
                ising_energy_bond_sum(&model, &x).to_bits(),
                "code {code}"
            );
            assert_eq!(x.interfaces() % 2, 0, "code {code}");
            assert_eq!(x.n_plus() + x.n_minus(), n);
        }
    }

    #[test]
    fn ising_delta_matches_energy_difference() {
        let n = 6;
        // Dyadic field keeps every quantity exactly representable.
        let model = IsingModel::new(n, 1.0, 0.5, None).unwrap();
        for code in 0..1u64 << n {
            let x = SpinConfig::from_code(code, n);
            for k in 0..n {
                let diff = ising_energy(&model, &x.flipped(k)) - ising_energy(&model, &x);
                assert_eq!(diff, ising_delta(&model, &x, k), "code {code} site {k}");
            }
        }
        let rough = IsingModel::new(n, 1.0, 0.3, None).unwrap();
        for code in [0u64, 17, 45, 63] {
            let x = SpinConfig::from_code(code, n);
            for k in 0..n {
                let diff = ising_energy(&rough, &x.flipped(k)) - ising_energy(&rough, &x);
                assert!((diff - ising_delta(&rough, &x, k)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn droplet_closed_forms() {
        for n in [6usize, 12] {
            let q = 1.0 / n as f64;
            let beta = 1.0;
            let h = 0.5;
            let p = droplet_chain(n, beta, h, q).unwrap();
            assert_eq!(p.get(n, n), 1.0);
            let hit = markov::mean_hitting_times(&p, &[n]).unwrap();
            let expect2 = (n as f64) * (n as f64 - 2.0) / 2.0;
            assert!(
                (hit[2] - expect2).abs() / expect2 < 1e-9,
                "N = {n}: {} vs {expect2}",
                hit[2]
            );
            let delta_h = 4.0 - 2.0 * h;
            let expect0 = 1.5 * (beta * delta_h).exp() + 1.0 / (2.0 * q) + expect2;
            assert!(
                (hit[0] - expect0).abs() / expect0 < 1e-9,
                "N = {n}: {} vs {expect0}",
                hit[0]
            );
        }
    }

    #[test]
    fn corpus_alternating_text() {
        let text: String = std::iter::repeat("ab").take(50).collect();
        let model = corpus_fit(&text, &['a', 'b'], 0.0).unwrap();
        assert_eq!(model.matrix().get(0, 1), 1.0);
        assert_eq!(model.matrix().get(1, 0), 1.0);
        let mut rng = RngStream::new(7, 0);
        let out = corpus_generate(&model, 10, &mut rng);
        let chars: Vec<char> = out.chars().collect();
        assert_eq!(chars.len(), 10);
        for w in chars.windows(2) {
            assert_ne!(w[0], w[1], "alternation broken in {out}");
        }
    }

    #[test]
    fn corpus_laplace_smoothing() {
        // "ababa": n_a = 2 bigrams start at a, none of them aa.
        let model = corpus_fit("ababa", &['a', 'b'], 1.0).unwrap();
        assert!((model.matrix().get(0, 0) - 1.0 / 4.0).abs() < 1e-15);
        assert!((model.matrix().get(0, 1) - 3.0 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn corpus_rejects_thin_text() {
        assert!(matches!(
            corpus_fit("xyz", &['a', 'b'], 0.0),
            Err(Error::EmptyCorpus)
        ));
        assert!(matches!(
            corpus_fit("a", &['a', 'b'], 0.0),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn standard_alphabet_has_sixty_symbols() {
        let a = standard_alphabet();
        assert_eq!(a.len(), 60);
        let unique: std::collections::HashSet<char> = a.iter().copied().collect();
        assert_eq!(unique.len(), 60);
    }
}
