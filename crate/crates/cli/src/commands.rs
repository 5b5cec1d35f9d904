//! Command handlers.
//!
//! Each handler consumes its parsed argument struct, drives the library,
//! and emits exactly one report: a JSON document, or CSV when a command
//! offers a time series and `--format csv` asks for it. The argument
//! struct is serialized verbatim into the report's `config_echo` block,
//! so a run can be reproduced by feeding that block back to `replay`.

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use mcmclab_core::contkernel::{
    ar1_contraction, ar1_drift, ar1_grid, ar1_invariant, discretize, Ar1Model,
};
use mcmclab_core::lyapunov::{
    accelerate_drift, contraction_audit, find_minorization, fit_geometric_drift, generator_apply,
    hairer_mattingly_constants, DriftCertificate, DEFAULT_PIVOT_QUANTILE,
};
use mcmclab_core::markov::{classify, invariant_distribution, invariant_residual};
use mcmclab_core::models::{
    corpus_fit, corpus_generate, ehrenfest_matrix, ising_energy, standard_alphabet, IsingModel,
    SpinConfig,
};
use mcmclab_core::rng::RngStream;
use mcmclab_core::sampler::{
    gibbs_distribution, glauber_step, ising_state_space, kawasaki_step, matrix_step, mc_volume,
    plan_samples, sample_normal_pair, AcceptanceRule, EstimatorReport, Inequality,
};
use mcmclab_core::spectral::full_spectrum;
use mcmclab_core::{Error, Result};

use crate::io;
use crate::presets::{self, BuiltChain};

/// Echo of the effective parameters, embedded in every report.
#[derive(Serialize)]
pub struct ConfigEcho {
    /// The subcommand that produced the report.
    pub command: &'static str,
    /// Its full argument struct, defaults resolved.
    pub params: serde_json::Value,
}

fn echo<T: Serialize>(command: &'static str, args: &T) -> Result<ConfigEcho> {
    let params = serde_json::to_value(args)
        .map_err(|e| Error::ParameterOutOfRange(format!("cannot echo config: {e}")))?;
    Ok(ConfigEcho { command, params })
}

fn from_params<T: for<'de> Deserialize<'de>>(params: serde_json::Value) -> Result<T> {
    serde_json::from_value(params)
        .map_err(|e| Error::ParameterOutOfRange(format!("config params: {e}")))
}

/// Output format of the simulation commands.
#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    /// One JSON report with summary statistics.
    Json,
    /// The raw time series as CSV.
    Csv,
}

fn load_source(matrix: Option<&str>, chain: Option<&str>) -> Result<BuiltChain> {
    match (matrix, chain) {
        (Some(path), None) => {
            let m = io::load_matrix(path)?;
            let values = (0..m.n()).map(|i| i as f64).collect();
            Ok(BuiltChain {
                matrix: m,
                values,
                energies: None,
            })
        }
        (None, Some(spec)) => presets::chain_preset(spec),
        _ => Err(Error::ParameterOutOfRange(
            "pass exactly one of --matrix and --chain".into(),
        )),
    }
}

// ---------------------------------------------------------------- analyze

/// Arguments of `analyze`.
#[derive(clap::Args, Serialize, Deserialize)]
pub struct AnalyzeArgs {
    /// Transition matrix file: CSV rows or a JSON array of rows.
    #[arg(long)]
    pub matrix: Option<String>,
    /// Builtin chain preset instead of a file (see `certify --help`).
    #[arg(long)]
    pub chain: Option<String>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Serialize)]
struct SpectralDoc {
    /// Eigenvalues as `[re, im]`, sorted by decreasing modulus.
    eigenvalues: Vec<[f64; 2]>,
    rho: f64,
    gap: f64,
    unit_modulus_count: usize,
}

#[derive(Serialize)]
struct AnalyzeDoc {
    config_echo: ConfigEcho,
    n: usize,
    irreducible: bool,
    /// Period of the chain when irreducible.
    period: Option<usize>,
    periods: Vec<usize>,
    aperiodic: bool,
    classes: Vec<Vec<usize>>,
    closed: Vec<bool>,
    /// Detailed-balance weights, normalized to total mass 1, when the
    /// chain is reversible.
    reversible_alpha: Option<Vec<f64>>,
    /// Invariant law, when the chain is irreducible.
    pi: Option<Vec<f64>>,
    /// `l1` residual of the invariance equation at `pi`.
    residual_l1: Option<f64>,
    spectral: Option<SpectralDoc>,
}

/// Structural and spectral analysis of a finite chain.
pub fn analyze(args: &AnalyzeArgs) -> Result<()> {
    let built = load_source(args.matrix.as_deref(), args.chain.as_deref())?;
    let p = built.matrix;
    let report = classify(&p);
    let (pi, residual_l1, spectral) = if report.irreducible {
        let s = full_spectrum(&p)?;
        let residual = invariant_residual(&p, &s.pi)?;
        let doc = SpectralDoc {
            eigenvalues: s.eigenvalues.iter().map(|z| [z.re, z.im]).collect(),
            rho: s.rho,
            gap: s.gap,
            unit_modulus_count: s.unit_modulus_count,
        };
        (Some(s.pi), Some(residual), Some(doc))
    } else {
        (None, None, None)
    };
    let doc = AnalyzeDoc {
        config_echo: echo("analyze", args)?,
        n: p.n(),
        irreducible: report.irreducible,
        period: report.irreducible.then(|| report.periods[0]),
        periods: report.periods,
        aperiodic: report.aperiodic,
        classes: report.classes,
        closed: report.closed,
        reversible_alpha: report.reversible,
        pi,
        residual_l1,
        spectral,
    };
    io::emit(args.out.as_deref(), &io::to_json_text(&doc)?)
}

// ---------------------------------------------------------------- certify

/// Arguments of `certify`.
#[derive(clap::Args, Serialize, Deserialize)]
pub struct CertifyArgs {
    /// Transition matrix file.
    #[arg(long)]
    pub matrix: Option<String>,
    /// Builtin chain preset, e.g. `ehrenfest-m:N=16`.
    #[arg(long)]
    pub chain: Option<String>,
    /// Kernel preset discretized on a grid, e.g. `ar1:a=0.5,sigma=1`.
    #[arg(long)]
    pub kernel: Option<String>,
    /// Lyapunov function: builtin `m2`, builtin `energy-gap`, or a
    /// vector file.
    #[arg(long = "V")]
    #[serde(rename = "V")]
    pub v: String,
    /// Sublevel radius: the small set is `{V < R}`.
    #[arg(long = "R")]
    #[serde(rename = "R")]
    pub r: f64,
    /// Certify the T-step kernel (drift constants are accelerated
    /// accordingly; minorization is sought on the T-step matrix).
    #[arg(long = "T", default_value_t = 1)]
    #[serde(rename = "T")]
    pub t: u64,
    /// Mass parameter in `(0, alpha)`; `alpha/2` when absent.
    #[arg(long)]
    pub alpha0: Option<f64>,
    /// Level parameter in `(gamma + 2d/R, 1)`; window midpoint when
    /// absent.
    #[arg(long)]
    pub gamma0: Option<f64>,
    /// Random measure pairs drawn by the contraction audit.
    #[arg(long, default_value_t = 200)]
    pub pairs: usize,
    /// Seed of the audit's random pairs.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Grid nodes used to discretize `--kernel`.
    #[arg(long, default_value_t = 257)]
    pub grid_m: usize,
    /// Truncation half-width for `--kernel`; preset default when absent.
    #[arg(long)]
    pub grid_l: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Serialize)]
struct DriftDoc {
    c: f64,
    d: f64,
}

#[derive(Serialize)]
struct AccelDoc {
    #[serde(rename = "T")]
    t: u64,
    c: f64,
    d: f64,
}

#[derive(Serialize)]
struct GridSummaryDoc {
    m: usize,
    l: f64,
    max_tail_defect: f64,
}

#[derive(Serialize)]
struct CertificateDoc {
    c: f64,
    d: f64,
    #[serde(rename = "R")]
    r: f64,
    /// Small-set states, in the labels of the input chain.
    #[serde(rename = "K_indices")]
    k_indices: Vec<usize>,
    alpha: f64,
    /// Minorizing law over the working state space (see
    /// `restricted_class` for its labels).
    nu: Vec<f64>,
    alpha0: f64,
    gamma0: f64,
    beta: f64,
    gamma_bar: f64,
    #[serde(rename = "M_bound")]
    m_bound: f64,
}

#[derive(Serialize)]
struct AuditDoc {
    pairs_tested: usize,
    max_ratio: f64,
    gamma_bar: f64,
    pass: bool,
}

#[derive(Serialize)]
struct CertifyDoc {
    config_echo: ConfigEcho,
    states: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<GridSummaryDoc>,
    /// One-step drift fitted to the input chain.
    drift: DriftDoc,
    /// Drift constants of the T-step kernel, when `--T` exceeds 1.
    #[serde(skip_serializing_if = "Option::is_none")]
    accelerated: Option<AccelDoc>,
    /// When the T-step kernel is reducible (a periodic chain observed at
    /// a multiple of its period), the certificate lives on the closed
    /// class containing the minimizer of `V`; these are its states in
    /// the labels of the input chain.
    #[serde(skip_serializing_if = "Option::is_none")]
    restricted_class: Option<Vec<usize>>,
    certificate: CertificateDoc,
    audit: AuditDoc,
}

/// Full certificate pipeline: fit drift, accelerate, restrict to the
/// anchor class if the powered chain splits, extract the minorization,
/// compute the contraction constants, and audit them on random pairs.
pub fn certify(args: &CertifyArgs) -> Result<()> {
    let sources = [&args.matrix, &args.chain, &args.kernel];
    if sources.iter().filter(|s| s.is_some()).count() != 1 {
        return Err(Error::ParameterOutOfRange(
            "pass exactly one of --matrix, --chain, and --kernel".into(),
        ));
    }
    let (built, grid_summary) = if let Some(spec) = args.kernel.as_deref() {
        let (kernel, l) = presets::kernel_preset(spec, args.grid_l)?;
        let grid = discretize(&kernel, l, args.grid_m)?;
        let max_defect = grid.defects().iter().copied().fold(0.0, f64::max);
        let built = BuiltChain {
            matrix: grid.matrix().clone(),
            values: grid.nodes().to_vec(),
            energies: None,
        };
        (
            built,
            Some(GridSummaryDoc {
                m: args.grid_m,
                l,
                max_tail_defect: max_defect,
            }),
        )
    } else {
        (
            load_source(args.matrix.as_deref(), args.chain.as_deref())?,
            None,
        )
    };
    let p = built.matrix;
    let v = presets::resolve_v(&args.v, &built.values, built.energies.as_deref())?;

    let fitted = fit_geometric_drift(&p, &v, DEFAULT_PIVOT_QUANTILE)?;
    let (p_work, drift_work, accelerated) = if args.t == 1 {
        (p, fitted.clone(), None)
    } else {
        let accel = accelerate_drift(&p, &fitted, args.t)?;
        let doc = AccelDoc {
            t: args.t,
            c: accel.c,
            d: accel.d,
        };
        (p.power(args.t)?, accel, Some(doc))
    };

    // A periodic chain observed every T steps splits into its cyclic
    // classes; the certificate then lives on the class of the V-minimizer.
    let structure = classify(&p_work);
    let (p_red, v_red, labels) = if structure.irreducible {
        let labels: Vec<usize> = (0..p_work.n()).collect();
        (p_work, v.clone(), labels)
    } else {
        let anchor = (0..v.len())
            .min_by(|&i, &j| v[i].total_cmp(&v[j]))
            .expect("nonempty state space");
        let class = structure
            .classes
            .iter()
            .find(|class| class.binary_search(&anchor).is_ok())
            .expect("classes partition the states")
            .clone();
        let v_red = class.iter().map(|&i| v[i]).collect();
        (p_work.restrict(&class)?, v_red, class)
    };
    let restricted = labels.len() < v.len();

    let drift_red =
        DriftCertificate::geometric_checked(&p_red, &v_red, drift_work.c, drift_work.d)?;
    let minor = find_minorization(&p_red, &v_red, args.r)?;
    let cert = hairer_mattingly_constants(&drift_red, &minor, args.alpha0, args.gamma0)?;
    let mut rng = RngStream::new(args.seed, 0);
    let audit = contraction_audit(&p_red, &cert, args.pairs, &mut rng)?;

    let doc = CertifyDoc {
        config_echo: echo("certify", args)?,
        states: v.len(),
        grid: grid_summary,
        drift: DriftDoc {
            c: fitted.c,
            d: fitted.d,
        },
        accelerated,
        restricted_class: restricted.then(|| labels.clone()),
        certificate: CertificateDoc {
            c: cert.c,
            d: cert.d,
            r: cert.r,
            k_indices: cert.k_indices.iter().map(|&k| labels[k]).collect(),
            alpha: cert.alpha,
            nu: cert.nu.clone(),
            alpha0: cert.alpha0,
            gamma0: cert.gamma0,
            beta: cert.beta,
            gamma_bar: cert.gamma_bar,
            m_bound: cert.m_bound,
        },
        audit: AuditDoc {
            pairs_tested: audit.pairs_tested,
            max_ratio: audit.max_ratio,
            gamma_bar: cert.gamma_bar,
            pass: true,
        },
    };
    io::emit(args.out.as_deref(), &io::to_json_text(&doc)?)
}

// ------------------------------------------------------------------ ising

/// Spin dynamics of the `ising` command.
#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dynamics {
    /// Single-site heatbath flips.
    Glauber,
    /// Single-site Metropolis flips.
    Metropolis,
    /// Magnetization-conserving exchanges of opposite spins.
    Kawasaki,
}

/// Initial configuration of the spin commands.
#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Init {
    /// All spins `+1`.
    Plus,
    /// All spins `-1`.
    Minus,
    /// First half `+1`, second half `-1`.
    Half,
}

/// Arguments of `ising`.
#[derive(clap::Args, Serialize, Deserialize)]
pub struct IsingArgs {
    /// Number of spins on the circle.
    #[arg(long)]
    pub n: usize,
    /// Inverse temperature.
    #[arg(long)]
    pub beta: f64,
    /// External field, in `(0, 1]`.
    #[arg(long)]
    pub h: f64,
    /// Per-site flip rate; `1/N` when absent.
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long, value_enum, default_value_t = Dynamics::Glauber)]
    pub dynamics: Dynamics,
    /// Measured steps, after burn-in.
    #[arg(long, default_value_t = 100_000)]
    pub steps: u64,
    #[arg(long, default_value_t = 0)]
    pub burn_in: u64,
    #[arg(long, value_enum, default_value_t = Init::Half)]
    pub init: Init,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Keep every thin-th measured step in CSV output.
    #[arg(long, default_value_t = 1)]
    pub thin: u64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Serialize)]
struct IsingModelDoc {
    n: usize,
    beta: f64,
    h: f64,
    q: f64,
}

#[derive(Serialize)]
struct IsingDoc {
    config_echo: ConfigEcho,
    model: IsingModelDoc,
    steps: u64,
    burn_in: u64,
    acceptance_rate: f64,
    mean_magnetization: f64,
    mean_energy: f64,
    /// Total-variation distance between the empirical occupation law and
    /// the exact Gibbs law (conditional on the magnetization sector for
    /// Kawasaki dynamics); absent when `N > 16`.
    tv_vs_gibbs: Option<f64>,
}

fn initial_config(init: Init, n: usize) -> SpinConfig {
    match init {
        Init::Plus => SpinConfig::all_plus(n),
        Init::Minus => SpinConfig::all_minus(n),
        Init::Half => {
            let half = n.div_ceil(2);
            let spins = (0..n).map(|i| if i < half { 1 } else { -1 }).collect();
            SpinConfig::new(spins).expect("half-and-half configuration is valid")
        }
    }
}

fn occupation_tv(counts: &[u64], total: u64, exact: &[f64]) -> f64 {
    let total = total as f64;
    0.5 * counts
        .iter()
        .zip(exact)
        .map(|(&c, &g)| (c as f64 / total - g).abs())
        .sum::<f64>()
}

/// Simulates the Ising circle and compares occupation statistics against
/// the exact Gibbs law when the state space is enumerable.
pub fn ising(args: &IsingArgs) -> Result<()> {
    if args.thin == 0 {
        return Err(Error::ParameterOutOfRange("--thin must be positive".into()));
    }
    let model = IsingModel::new(args.n, args.beta, args.h, args.q)?;
    let rule = match args.dynamics {
        Dynamics::Metropolis => AcceptanceRule::metropolis(model.q),
        Dynamics::Glauber | Dynamics::Kawasaki => AcceptanceRule::heatbath(model.q),
    };
    let mut x = initial_config(args.init, args.n);
    let init_code = x.code();
    let mut rng = RngStream::new(args.seed, 0);
    let mut counts = (args.n <= 16).then(|| vec![0u64; 1usize << args.n]);
    let mut accepted = 0u64;
    let mut sum_m = 0.0;
    let mut sum_e = 0.0;
    let mut csv = String::new();
    if args.format == Format::Csv {
        csv.push_str("step,magnetization,energy\n");
    }
    for step in 0..args.burn_in + args.steps {
        let acc = match args.dynamics {
            Dynamics::Kawasaki => {
                let (next, acc) = kawasaki_step(&model, &x, &rule, &mut rng)?;
                x = next;
                acc
            }
            _ => {
                let (next, acc, _) = glauber_step(&model, &x, &rule, &mut rng);
                x = next;
                acc
            }
        };
        if step < args.burn_in {
            continue;
        }
        let m = x.magnetization();
        accepted += acc as u64;
        sum_m += m as f64;
        if let Some(counts) = counts.as_mut() {
            counts[x.code() as usize] += 1;
        }
        let e = ising_energy(&model, &x);
        sum_e += e;
        let measured = step - args.burn_in;
        if args.format == Format::Csv && measured % args.thin == 0 {
            csv.push_str(&format!("{measured},{m},{e}\n"));
        }
    }
    if args.format == Format::Csv {
        return io::emit(args.out.as_deref(), &csv);
    }

    let tv_vs_gibbs = match counts {
        None => None,
        Some(counts) => {
            let (h_vec, _) = ising_state_space(&model);
            match args.dynamics {
                Dynamics::Kawasaki => {
                    // The exchange dynamics is confined to its magnetization
                    // sector; compare against the conditional Gibbs law there.
                    let sector_plus = SpinConfig::from_code(init_code, args.n).n_plus();
                    let sector: Vec<usize> = (0..counts.len())
                        .filter(|&c| (c as u64).count_ones() as usize == sector_plus)
                        .collect();
                    let sector_h: Vec<f64> = sector.iter().map(|&c| h_vec[c]).collect();
                    let gibbs = gibbs_distribution(&sector_h, args.beta)?;
                    let sector_counts: Vec<u64> = sector.iter().map(|&c| counts[c]).collect();
                    Some(occupation_tv(&sector_counts, args.steps, &gibbs))
                }
                _ => {
                    let gibbs = gibbs_distribution(&h_vec, args.beta)?;
                    Some(occupation_tv(&counts, args.steps, &gibbs))
                }
            }
        }
    };
    let doc = IsingDoc {
        config_echo: echo("ising", args)?,
        model: IsingModelDoc {
            n: model.n,
            beta: model.beta,
            h: model.h,
            q: model.q,
        },
        steps: args.steps,
        burn_in: args.burn_in,
        acceptance_rate: accepted as f64 / args.steps as f64,
        mean_magnetization: sum_m / args.steps as f64,
        mean_energy: sum_e / args.steps as f64,
        tv_vs_gibbs,
    };
    io::emit(args.out.as_deref(), &io::to_json_text(&doc)?)
}

// -------------------------------------------------------------- ehrenfest

/// Arguments of `ehrenfest`.
#[derive(clap::Args, Serialize, Deserialize)]
pub struct EhrenfestArgs {
    /// Number of balls.
    #[arg(long)]
    pub n: usize,
    /// Initial count in the tracked urn.
    #[arg(long, default_value_t = 0)]
    pub start: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub steps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Keep every thin-th step in CSV output.
    #[arg(long, default_value_t = 1)]
    pub thin: u64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Serialize)]
struct ReturnTimeDoc {
    /// `1 / pi(start)`.
    exact: f64,
    /// Mean observed gap between visits to the start state.
    observed: Option<f64>,
    returns_observed: u64,
}

#[derive(Serialize)]
struct EhrenfestDoc {
    config_echo: ConfigEcho,
    n: usize,
    start: usize,
    steps: u64,
    tv_vs_binomial: f64,
    mean_count: f64,
    return_time: ReturnTimeDoc,
}

fn binomial_half_pmf(n: usize) -> Result<Vec<f64>> {
    if n > 1024 {
        return Err(Error::ParameterOutOfRange(
            "N must be at most 1024 for the exact binomial reference".into(),
        ));
    }
    let mut pmf = vec![0.0; n + 1];
    pmf[0] = 0.5f64.powi(n as i32);
    for k in 0..n {
        pmf[k + 1] = pmf[k] * (n - k) as f64 / (k + 1) as f64;
    }
    Ok(pmf)
}

/// Simulates the urn chain and reports occupation and return-time
/// statistics against the binomial invariant law.
pub fn ehrenfest(args: &EhrenfestArgs) -> Result<()> {
    if args.thin == 0 {
        return Err(Error::ParameterOutOfRange("--thin must be positive".into()));
    }
    if args.start > args.n {
        return Err(Error::ParameterOutOfRange(format!(
            "start count {} exceeds N={}",
            args.start, args.n
        )));
    }
    let pmf = binomial_half_pmf(args.n)?;
    let p = ehrenfest_matrix(args.n)?;
    let mut rng = RngStream::new(args.seed, 0);
    let mut state = args.start;
    let mut counts = vec![0u64; args.n + 1];
    let mut sum = 0.0;
    let mut returns = 0u64;
    let mut gap_sum = 0u64;
    let mut last_visit = Some(0u64);
    let mut csv = String::new();
    if args.format == Format::Csv {
        csv.push_str("step,count,magnetization\n");
    }
    for step in 1..=args.steps {
        matrix_step(&p, &mut state, &mut rng);
        counts[state] += 1;
        sum += state as f64;
        if state == args.start {
            if let Some(t0) = last_visit {
                returns += 1;
                gap_sum += step - t0;
            }
            last_visit = Some(step);
        }
        if args.format == Format::Csv && (step - 1) % args.thin == 0 {
            let m = 2 * state as i64 - args.n as i64;
            csv.push_str(&format!("{step},{state},{m}\n"));
        }
    }
    if args.format == Format::Csv {
        return io::emit(args.out.as_deref(), &csv);
    }
    let doc = EhrenfestDoc {
        config_echo: echo("ehrenfest", args)?,
        n: args.n,
        start: args.start,
        steps: args.steps,
        tv_vs_binomial: occupation_tv(&counts, args.steps, &pmf),
        mean_count: sum / args.steps as f64,
        return_time: ReturnTimeDoc {
            exact: 1.0 / pmf[args.start],
            observed: (returns > 0).then(|| gap_sum as f64 / returns as f64),
            returns_observed: returns,
        },
    };
    io::emit(args.out.as_deref(), &io::to_json_text(&doc)?)
}

// -------------------------------------------------------------------- ar1

/// Arguments of `ar1`.
#[derive(clap::Args, Serialize, Deserialize)]
pub struct Ar1Args {
    /// Autoregression coefficient, `|a| < 1`.
    #[arg(long, allow_hyphen_values = true)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Measured steps, after burn-in.
    #[arg(long, default_value_t = 1_000_000)]
    pub steps: u64,
    #[arg(long, default_value_t = 10_000)]
    pub burn_in: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Grid nodes; 0 disables the discretization report.
    #[arg(long, default_value_t = 0)]
    pub grid_m: usize,
    /// Truncation half-width; `8 sigma / sqrt(1 - a^2)` when absent.
    #[arg(long)]
    pub grid_l: Option<f64>,
    /// Sublevel radius of the minorization interval; `4 sigma^2 /
    /// (1 - a^2)` when absent.
    #[arg(long = "R")]
    #[serde(rename = "R")]
    pub r: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Keep every thin-th measured step in CSV output.
    #[arg(long, default_value_t = 1)]
    pub thin: u64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Serialize)]
struct Ar1ModelDoc {
    a: f64,
    sigma: f64,
}

#[derive(Serialize)]
struct GaussianDoc {
    mean: f64,
    variance: f64,
}

#[derive(Serialize)]
struct SimulatedDoc {
    steps: u64,
    burn_in: u64,
    mean: f64,
    variance: f64,
    variance_rel_error: f64,
}

#[derive(Serialize)]
struct ContractionDoc {
    #[serde(rename = "R")]
    r: f64,
    alpha: f64,
    alpha0: f64,
    gamma0: f64,
    beta: f64,
    gamma_bar: f64,
    #[serde(rename = "M_bound")]
    m_bound: f64,
    /// Convergence rate `1 - gamma_bar`.
    rate: f64,
}

#[derive(Serialize)]
struct GridDoc {
    m: usize,
    l: f64,
    max_tail_defect: f64,
    /// Sup over the inner half of the window of the defect of the drift
    /// identity `(L V)(x) = -(1 - a^2) x^2 + sigma^2` for `V = x^2`.
    generator_sup_error: f64,
    /// Variance of the grid fixed point.
    invariant_variance: f64,
    /// Sup over the inner half of the window of the density error of the
    /// grid fixed point against the exact invariant law.
    invariant_density_sup_error: f64,
    nodes: Vec<f64>,
    invariant_density: Vec<f64>,
    defects: Vec<f64>,
}

#[derive(Serialize)]
struct Ar1Doc {
    config_echo: ConfigEcho,
    model: Ar1ModelDoc,
    drift: DriftDoc,
    invariant: GaussianDoc,
    simulated: SimulatedDoc,
    contraction: ContractionDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<GridDoc>,
}

/// AR(1) diagnostics: closed-form drift and invariant law, a simulated
/// trajectory, the explicit contraction constants, and optionally the
/// grid discretization compared against the closed forms.
pub fn ar1(args: &Ar1Args) -> Result<()> {
    if args.thin == 0 {
        return Err(Error::ParameterOutOfRange("--thin must be positive".into()));
    }
    let model = Ar1Model::new(args.a, args.sigma)?;
    let drift = ar1_drift(&model)?;
    let invariant = ar1_invariant(&model)?;
    let (_, minor, constants) = ar1_contraction(&model, args.r, None, None)?;

    let mut rng = RngStream::new(args.seed, 0);
    let mut x = 0.0;
    let mut mean = 0.0;
    let mut m2 = 0.0;
    let mut kept = 0u64;
    let mut csv = String::new();
    if args.format == Format::Csv {
        csv.push_str("step,x\n");
    }
    for step in 0..args.burn_in + args.steps {
        x = model.a * x + model.sigma * sample_normal_pair(&mut rng).0;
        if step < args.burn_in {
            continue;
        }
        kept += 1;
        let delta = x - mean;
        mean += delta / kept as f64;
        m2 += delta * (x - mean);
        let measured = step - args.burn_in;
        if args.format == Format::Csv && measured % args.thin == 0 {
            csv.push_str(&format!("{measured},{x}\n"));
        }
    }
    if args.format == Format::Csv {
        return io::emit(args.out.as_deref(), &csv);
    }
    let variance = m2 / (kept.max(2) - 1) as f64;

    let grid = if args.grid_m > 0 {
        let grid = ar1_grid(&model, args.grid_l, args.grid_m)?;
        let nodes = grid.nodes().to_vec();
        let l = nodes.last().copied().unwrap_or(0.0);
        let v: Vec<f64> = nodes.iter().map(|&x| x * x).collect();
        let lv = generator_apply(grid.matrix(), &v)?;
        let generator_sup_error = nodes
            .iter()
            .zip(&lv)
            .filter(|(&x, _)| x.abs() <= l / 2.0)
            .map(|(&x, &val)| (val - (-drift.c * x * x + drift.d)).abs())
            .fold(0.0, f64::max);
        let masses = invariant_distribution(grid.matrix())?;
        let invariant_variance = nodes
            .iter()
            .zip(&masses)
            .map(|(&x, &w)| w * x * x)
            .sum::<f64>();
        let density: Vec<f64> = masses
            .iter()
            .zip(grid.weights())
            .map(|(&mass, &w)| mass / w)
            .collect();
        let invariant_density_sup_error = nodes
            .iter()
            .zip(&density)
            .filter(|(&x, _)| x.abs() <= l / 2.0)
            .map(|(&x, &d)| (d - invariant.density(x)).abs())
            .fold(0.0, f64::max);
        Some(GridDoc {
            m: args.grid_m,
            l,
            max_tail_defect: grid.defects().iter().copied().fold(0.0, f64::max),
            generator_sup_error,
            invariant_variance,
            invariant_density_sup_error,
            nodes,
            invariant_density: density,
            defects: grid.defects().to_vec(),
        })
    } else {
        None
    };

    let doc = Ar1Doc {
        config_echo: echo("ar1", args)?,
        model: Ar1ModelDoc {
            a: model.a,
            sigma: model.sigma,
        },
        drift: DriftDoc {
            c: drift.c,
            d: drift.d,
        },
        invariant: GaussianDoc {
            mean: invariant.mean,
            variance: invariant.variance,
        },
        simulated: SimulatedDoc {
            steps: args.steps,
            burn_in: args.burn_in,
            mean,
            variance,
            variance_rel_error: (variance - invariant.variance).abs() / invariant.variance,
        },
        contraction: ContractionDoc {
            r: minor.r,
            alpha: minor.alpha,
            alpha0: constants.alpha0,
            gamma0: constants.gamma0,
            beta: constants.beta,
            gamma_bar: constants.gamma_bar,
            m_bound: constants.m_bound,
            rate: 1.0 - constants.gamma_bar,
        },
        grid,
    };
    io::emit(args.out.as_deref(), &io::to_json_text(&doc)?)
}

// -------------------------------------------------------------- mc-volume

/// Arguments of `mc-volume`.
#[derive(clap::Args, Serialize, Deserialize)]
pub struct McVolumeArgs {
    /// Ambient dimension of the unit cube.
    #[arg(long)]
    pub dim: usize,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Ball constraint: radius around --center (cube center by default).
    #[arg(long)]
    pub ball: Option<f64>,
    /// Ball center as comma-separated coordinates.
    #[arg(long)]
    pub center: Option<String>,
    /// Affine constraint `a1,..,ad,b` meaning `a . x + b >= 0`; repeatable.
    #[arg(long)]
    pub affine: Vec<String>,
    /// Chebychev-plan precision target.
    #[arg(long)]
    pub plan_delta: Option<f64>,
    /// Chebychev-plan failure probability.
    #[arg(long)]
    pub plan_eps: Option<f64>,
    /// Variance bound fed to the plan; 1 when absent.
    #[arg(long)]
    pub plan_var: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Serialize)]
struct McVolumeDoc {
    config_echo: ConfigEcho,
    dim: usize,
    samples: u64,
    report: EstimatorReport,
}

fn parse_float_list(raw: &str, what: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(|tok| {
            tok.trim().parse::<f64>().map_err(|_| {
                Error::ParameterOutOfRange(format!("{what}: not a number: {:?}", tok.trim()))
            })
        })
        .collect()
}

/// Hit-or-miss estimate of the volume cut out of the unit cube by ball
/// and affine constraints, with Chebychev error reporting.
pub fn mc_volume_cmd(args: &McVolumeArgs) -> Result<()> {
    let mut inequalities = Vec::new();
    if let Some(radius) = args.ball {
        let center = match args.center.as_deref() {
            Some(raw) => parse_float_list(raw, "--center")?,
            None => vec![0.5; args.dim],
        };
        if center.len() != args.dim {
            return Err(Error::DimensionMismatch {
                expected: args.dim,
                got: center.len(),
            });
        }
        inequalities.push(Inequality::Ball { center, radius });
    } else if args.center.is_some() {
        return Err(Error::ParameterOutOfRange(
            "--center is only meaningful together with --ball".into(),
        ));
    }
    for raw in &args.affine {
        let mut coeffs = parse_float_list(raw, "--affine")?;
        if coeffs.len() != args.dim + 1 {
            return Err(Error::ParameterOutOfRange(format!(
                "--affine needs {} comma-separated numbers (a1..ad,b); got {}",
                args.dim + 1,
                coeffs.len()
            )));
        }
        let b = coeffs.pop().expect("nonempty coefficient list");
        inequalities.push(Inequality::Affine { a: coeffs, b });
    }
    if inequalities.is_empty() {
        return Err(Error::ParameterOutOfRange(
            "describe the region with --ball and/or --affine".into(),
        ));
    }
    let mut rng = RngStream::new(args.seed, 0);
    let mut report = mc_volume(args.dim, &inequalities, args.samples, &mut rng)?;
    match (args.plan_delta, args.plan_eps) {
        (Some(delta), Some(eps)) => {
            report.planner = Some(plan_samples(delta, eps, args.plan_var.unwrap_or(1.0), None)?);
        }
        (None, None) => {
            if args.plan_var.is_some() {
                return Err(Error::ParameterOutOfRange(
                    "--plan-var needs --plan-delta and --plan-eps".into(),
                ));
            }
        }
        _ => {
            return Err(Error::ParameterOutOfRange(
                "--plan-delta and --plan-eps go together".into(),
            ));
        }
    }
    let doc = McVolumeDoc {
        config_echo: echo("mc-volume", args)?,
        dim: args.dim,
        samples: args.samples,
        report,
    };
    io::emit(args.out.as_deref(), &io::to_json_text(&doc)?)
}

// ---------------------------------------------------------------- textgen

/// Arguments of `textgen`.
#[derive(clap::Args, Serialize, Deserialize)]
pub struct TextgenArgs {
    /// Corpus text file to fit the bigram chain on.
    #[arg(long)]
    pub corpus: String,
    /// Symbols to generate.
    #[arg(long, default_value_t = 500)]
    pub length: usize,
    /// Additive smoothing of the bigram counts.
    #[arg(long, default_value_t = 0.0)]
    pub smoothing: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Serialize)]
struct TextgenDoc {
    config_echo: ConfigEcho,
    alphabet_size: usize,
    corpus_chars: usize,
    length: usize,
    text: String,
}

/// Fits a bigram chain to a corpus and generates from it.
pub fn textgen(args: &TextgenArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.corpus).map_err(|e| {
        Error::ParameterOutOfRange(format!("cannot read {}: {e}", args.corpus))
    })?;
    let alphabet = standard_alphabet();
    let model = corpus_fit(&text, &alphabet, args.smoothing)?;
    let mut rng = RngStream::new(args.seed, 0);
    let generated = corpus_generate(&model, args.length, &mut rng);
    let doc = TextgenDoc {
        config_echo: echo("textgen", args)?,
        alphabet_size: alphabet.len(),
        corpus_chars: text.chars().count(),
        length: args.length,
        text: generated,
    };
    io::emit(args.out.as_deref(), &io::to_json_text(&doc)?)
}

// ----------------------------------------------------------------- replay

/// Arguments of `replay`.
#[derive(clap::Args)]
pub struct ReplayArgs {
    /// A previous report (or just its config_echo block) to re-run.
    #[arg(long)]
    pub config: String,
}

/// Re-runs the command recorded in an echoed config; the same effective
/// parameters give the same report.
pub fn replay(args: &ReplayArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        Error::ParameterOutOfRange(format!("cannot read {}: {e}", args.config))
    })?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::ParameterOutOfRange(format!("config JSON: {e}")))?;
    let block = value.get("config_echo").cloned().unwrap_or(value);
    let command = block
        .get("command")
        .and_then(|v| v.as_str())
        .ok_or_else(|| Error::ParameterOutOfRange("config has no \"command\" field".into()))?
        .to_string();
    let params = block
        .get("params")
        .cloned()
        .ok_or_else(|| Error::ParameterOutOfRange("config has no \"params\" field".into()))?;
    match command.as_str() {
        "analyze" => analyze(&from_params(params)?),
        "certify" => certify(&from_params(params)?),
        "ising" => ising(&from_params(params)?),
        "ehrenfest" => ehrenfest(&from_params(params)?),
        "ar1" => ar1(&from_params(params)?),
        "mc-volume" => mc_volume_cmd(&from_params(params)?),
        "textgen" => textgen(&from_params(params)?),
        other => Err(Error::ParameterOutOfRange(format!(
            "cannot replay command {other:?}"
        ))),
    }
}
