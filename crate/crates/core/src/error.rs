use thiserror::Error;

/// Errors reported by chain construction, analysis, and certification.
///
/// Variants carry enough context to name the offending state, row, or
/// parameter inequality; callers that print them get actionable messages.
#[derive(Debug, Clone, PartialEq, Error)]
#[non_exhaustive]
pub enum Error {
    /// A matrix entry is negative.
    #[error("entry ({row}, {col}) is negative: {value:e}")]
    NegativeEntry {
        /// Row index of the offending entry.
        row: usize,
        /// Column index of the offending entry.
        col: usize,
        /// The offending value.
        value: f64,
    },

    /// A row sum deviates from 1 by more than the validation tolerance.
    #[error("row {row} sums to {sum} which is out of tolerance of 1")]
    RowSumOutOfTolerance {
        /// Index of the offending row.
        row: usize,
        /// The offending row sum.
        sum: f64,
    },

    /// Two operands have incompatible dimensions.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch {
        /// Dimension required by the other operand.
        expected: usize,
        /// Dimension actually supplied.
        got: usize,
    },

    /// The chain is not irreducible where a single communication class is
    /// required.
    #[error("chain is not irreducible")]
    NotIrreducible,

    /// A linear solve hit a singular or numerically degenerate system.
    #[error("linear system is singular or numerically degenerate")]
    SingularSystem,

    /// A state declared absorbing does not have a unit self-loop, or the
    /// requested target is not in the absorbing set.
    #[error("state {state} is not absorbing")]
    NotAbsorbing {
        /// The offending state.
        state: usize,
    },

    /// The supplied target set is empty.
    #[error("target set is empty")]
    EmptyTargetSet,

    /// The QR iteration failed to converge on some eigenvalue.
    #[error("eigensolver failed to converge")]
    EigensolverFailure,

    /// The eigenvector basis is too ill-conditioned for a spectral
    /// decomposition; direct powering is the fallback.
    #[error("eigenvector basis condition {cond:e} too large; matrix treated as non-diagonalizable")]
    NonDiagonalizable {
        /// Estimated 1-norm condition number of the eigenvector matrix.
        cond: f64,
    },

    /// The chain fails detailed balance.
    #[error("chain is not reversible")]
    NotReversible,

    /// The invariant law vanishes at a state where a ratio against it is
    /// needed.
    #[error("invariant law vanishes at state {state}")]
    ZeroPiEntry {
        /// The offending state.
        state: usize,
    },

    /// The supplied state set is empty.
    #[error("state set is empty")]
    EmptySet,

    /// No geometric drift inequality holds for the supplied Lyapunov
    /// function.
    #[error("no valid geometric drift: fitted contraction rate {c:e} is not positive")]
    NoValidDrift {
        /// The non-positive rate produced by the fit.
        c: f64,
    },

    /// The sublevel set `{V < R}` is empty.
    #[error("sublevel set {{V < {r}}} is empty")]
    EmptyK {
        /// The radius that produced an empty set.
        r: f64,
    },

    /// The rows over the small set share no common component, so the
    /// minorization mass is zero.
    #[error("minorization mass is zero; accelerate the chain (larger step count) and retry")]
    AlphaZero,

    /// A parameter violates one of its admissibility inequalities; the
    /// message names the failed inequality.
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),

    /// A certificate failed re-verification or a sampled contraction audit.
    #[error("certificate invalid: {0}")]
    CertificateInvalid(String),

    /// Completing the off-diagonal rates pushed a diagonal entry below zero.
    #[error("diagonal entry at state {state} would be {value}; lower the base rate")]
    DiagonalNegative {
        /// The offending state.
        state: usize,
        /// The negative diagonal value implied by the off-diagonal rates.
        value: f64,
    },

    /// A conserved-magnetization exchange step needs one spin of each sign.
    #[error("configuration has no opposite-spin pair to exchange")]
    NoOppositePair,

    /// A kernel row leaves more mass outside the truncation window than the
    /// kernel declares.
    #[error("row {row} leaves tail mass {defect:e} outside the truncation window")]
    TailMassTooLarge {
        /// Index of the offending grid row.
        row: usize,
        /// Measured tail mass.
        defect: f64,
    },

    /// The killed kernel has spectral radius at or above 1, so the potential
    /// series diverges.
    #[error("potential-kernel series diverges: killed spectral radius estimate {radius}")]
    SeriesDiverges {
        /// Estimated spectral radius of the killed kernel.
        radius: f64,
    },

    /// The autoregression is not a contraction, so no affine drift exists.
    #[error("autoregression is not contracting: |a| = {a_abs} >= 1")]
    NotContracting {
        /// Absolute value of the autoregressive coefficient.
        a_abs: f64,
    },

    /// The filtered corpus contains fewer than two symbols.
    #[error("corpus has fewer than two usable symbols after filtering")]
    EmptyCorpus,
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
