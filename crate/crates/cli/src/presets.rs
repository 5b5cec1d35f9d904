//! Named chains and kernels addressable from the command line.
//!
//! A preset is `name` or `name:key=value,key=value`. Unknown names and
//! unknown or missing keys are rejected with the offending token, so a
//! typo fails loudly instead of silently switching models.

use std::collections::BTreeMap;

use mcmclab_core::contkernel::{ar1_default_half_width, ar1_kernel, noisy_logistic_kernel};
use mcmclab_core::contkernel::{Ar1Model, DensityKernel};
use mcmclab_core::markov::StochasticMatrix;
use mcmclab_core::models::{
    cycle_walk, droplet_chain, ehrenfest_matrix, knight_chain, magnetization_chain, IsingModel,
    SpinConfig,
};
use mcmclab_core::sampler::{ising_state_space, metropolis_matrix, AcceptanceRule};
use mcmclab_core::{Error, Result};

/// A finite chain with the natural coordinate of each state and, when the
/// model has one, the energy of each state.
#[derive(Debug, Clone)]
pub struct BuiltChain {
    /// Validated transition matrix.
    pub matrix: StochasticMatrix,
    /// Per-state coordinate: magnetization for spin models, position
    /// otherwise. The builtin Lyapunov function `m2` is its square.
    pub values: Vec<f64>,
    /// Per-state energy, for models defined through a Hamiltonian.
    pub energies: Option<Vec<f64>>,
}

struct Params {
    name: String,
    map: BTreeMap<String, String>,
}

impl Params {
    fn parse(spec: &str) -> Result<Params> {
        let (name, body) = match spec.split_once(':') {
            Some((n, b)) => (n, Some(b)),
            None => (spec, None),
        };
        let mut map = BTreeMap::new();
        if let Some(body) = body {
            for token in body.split(',') {
                let token = token.trim();
                if token.is_empty() {
                    continue;
                }
                let (k, v) = token.split_once('=').ok_or_else(|| {
                    Error::ParameterOutOfRange(format!(
                        "preset parameter {token:?} is not key=value"
                    ))
                })?;
                if map.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                    return Err(Error::ParameterOutOfRange(format!(
                        "preset parameter {k:?} given twice"
                    )));
                }
            }
        }
        Ok(Params {
            name: name.trim().to_string(),
            map,
        })
    }

    fn take_f64(&mut self, key: &str) -> Result<Option<f64>> {
        match self.map.remove(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<f64>().map(Some).map_err(|_| {
                Error::ParameterOutOfRange(format!("preset parameter {key}={raw:?} is not a number"))
            }),
        }
    }

    fn need_f64(&mut self, key: &str) -> Result<f64> {
        self.take_f64(key)?.ok_or_else(|| {
            Error::ParameterOutOfRange(format!("preset {} needs {key}=...", self.name))
        })
    }

    fn need_usize(&mut self, key: &str) -> Result<usize> {
        match self.map.remove(key) {
            None => Err(Error::ParameterOutOfRange(format!(
                "preset {} needs {key}=...",
                self.name
            ))),
            Some(raw) => raw.parse::<usize>().map_err(|_| {
                Error::ParameterOutOfRange(format!(
                    "preset parameter {key}={raw:?} is not a nonnegative integer"
                ))
            }),
        }
    }

    fn take_string(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    fn finish(self) -> Result<()> {
        match self.map.into_keys().next() {
            None => Ok(()),
            Some(k) => Err(Error::ParameterOutOfRange(format!(
                "preset {} does not take parameter {k:?}",
                self.name
            ))),
        }
    }
}

fn centered(n: usize) -> Vec<f64> {
    (0..=n).map(|i| 2.0 * i as f64 - n as f64).collect()
}

fn positions(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64).collect()
}

/// Builds a finite chain preset.
///
/// Names: `ehrenfest:N=..`, `ehrenfest-m:N=..`, `cycle:N=..,p=..`,
/// `knight`, `two-state[:p=..,q=..]`, `flip`,
/// `droplet:N=..,beta=..,h=..[,q=..]`, and
/// `ising-glauber:N=..,beta=..,h=..[,q=..][,rule=heatbath|metropolis]`.
pub fn chain_preset(spec: &str) -> Result<BuiltChain> {
    let mut params = Params::parse(spec)?;
    let built = match params.name.as_str() {
        "ehrenfest" => {
            let n = params.need_usize("N")?;
            BuiltChain {
                matrix: ehrenfest_matrix(n)?,
                values: centered(n),
                energies: None,
            }
        }
        "ehrenfest-m" => {
            let n = params.need_usize("N")?;
            BuiltChain {
                matrix: magnetization_chain(n)?,
                values: centered(n),
                energies: None,
            }
        }
        "cycle" => {
            let n = params.need_usize("N")?;
            let p = params.take_f64("p")?.unwrap_or(0.5);
            BuiltChain {
                matrix: cycle_walk(n, p)?,
                values: positions(n),
                energies: None,
            }
        }
        "knight" => BuiltChain {
            matrix: knight_chain(),
            values: positions(64),
            energies: None,
        },
        "two-state" => {
            let p = params.take_f64("p")?.unwrap_or(2.0 / 3.0);
            let q = params.take_f64("q")?.unwrap_or(2.0 / 3.0);
            BuiltChain {
                matrix: StochasticMatrix::from_rows(
                    &[vec![1.0 - p, p], vec![q, 1.0 - q]],
                    1e-12,
                )?,
                values: positions(2),
                energies: None,
            }
        }
        "flip" => BuiltChain {
            matrix: StochasticMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]], 1e-12)?,
            values: positions(2),
            energies: None,
        },
        "droplet" => {
            let n = params.need_usize("N")?;
            let beta = params.need_f64("beta")?;
            let h = params.need_f64("h")?;
            let q = params.take_f64("q")?.unwrap_or(1.0 / n.max(1) as f64);
            BuiltChain {
                matrix: droplet_chain(n, beta, h, q)?,
                values: positions(n + 1),
                energies: None,
            }
        }
        "ising-glauber" => {
            let n = params.need_usize("N")?;
            if n > 10 {
                return Err(Error::ParameterOutOfRange(format!(
                    "ising-glauber enumerates all 2^N configurations; N={n} exceeds the cap of 10"
                )));
            }
            let beta = params.need_f64("beta")?;
            let h = params.need_f64("h")?;
            let q = params.take_f64("q")?;
            let model = IsingModel::new(n, beta, h, q)?;
            let rule = match params.take_string("rule").as_deref() {
                None | Some("heatbath") => AcceptanceRule::heatbath(model.q),
                Some("metropolis") => AcceptanceRule::metropolis(model.q),
                Some(other) => {
                    return Err(Error::ParameterOutOfRange(format!(
                        "unknown acceptance rule {other:?}; use heatbath or metropolis"
                    )))
                }
            };
            let (h_vec, edges) = ising_state_space(&model);
            let values = (0..1u64 << n)
                .map(|code| SpinConfig::from_code(code, n).magnetization() as f64)
                .collect();
            BuiltChain {
                matrix: metropolis_matrix(&h_vec, &edges, beta, &rule)?,
                values,
                energies: Some(h_vec),
            }
        }
        other => {
            return Err(Error::ParameterOutOfRange(format!(
                "unknown chain preset {other:?}"
            )))
        }
    };
    params.finish()?;
    Ok(built)
}

/// Builds a kernel preset at truncation half-width `l_override`, falling
/// back to the preset's own default width.
///
/// Names: `ar1:a=..,sigma=..`, `gaussian-walk:sigma=..` (no default
/// width; the window always leaks, which the discretizer then reports),
/// and `noisy-map:logistic,r=..,sigma=..`.
///
/// Returns the kernel and the half-width it was built for.
pub fn kernel_preset(spec: &str, l_override: Option<f64>) -> Result<(DensityKernel, f64)> {
    let (name, body) = match spec.split_once(':') {
        Some((n, b)) => (n.trim(), b),
        None => (spec.trim(), ""),
    };
    match name {
        "ar1" => {
            let mut params = Params::parse(&format!("ar1:{body}"))?;
            let a = params.need_f64("a")?;
            let sigma = params.need_f64("sigma")?;
            params.finish()?;
            let model = Ar1Model::new(a, sigma)?;
            let l = match l_override {
                Some(l) => l,
                None => ar1_default_half_width(&model)?,
            };
            Ok((ar1_kernel(&model, l)?, l))
        }
        "gaussian-walk" => {
            let mut params = Params::parse(&format!("gaussian-walk:{body}"))?;
            let sigma = params.need_f64("sigma")?;
            params.finish()?;
            let model = Ar1Model::new(1.0, sigma)?;
            let l = l_override.ok_or_else(|| {
                Error::ParameterOutOfRange(
                    "gaussian-walk has no default truncation half-width; pass --grid-l".into(),
                )
            })?;
            Ok((ar1_kernel(&model, l)?, l))
        }
        "noisy-map" => {
            let mut tokens = body.split(',');
            let map = tokens.next().unwrap_or("").trim();
            if map != "logistic" {
                return Err(Error::ParameterOutOfRange(format!(
                    "unknown noisy map {map:?}; only \"logistic\" is available"
                )));
            }
            let rest: Vec<&str> = tokens.collect();
            let mut params = Params::parse(&format!("noisy-map:{}", rest.join(",")))?;
            let r = params.need_f64("r")?;
            let sigma = params.need_f64("sigma")?;
            params.finish()?;
            let l = l_override.unwrap_or(r / 4.0 + 8.0 * sigma);
            Ok((noisy_logistic_kernel(r, sigma, l)?, l))
        }
        other => Err(Error::ParameterOutOfRange(format!(
            "unknown kernel preset {other:?}"
        ))),
    }
}

/// Resolves a Lyapunov-function request: the builtin `m2` (squared state
/// coordinate), the builtin `energy-gap` (energy above the ground state),
/// or a path to a vector file.
pub fn resolve_v(
    spec: &str,
    values: &[f64],
    energies: Option<&[f64]>,
) -> Result<Vec<f64>> {
    match spec {
        "m2" => Ok(values.iter().map(|m| m * m).collect()),
        "energy-gap" => {
            let h = energies.ok_or_else(|| {
                Error::ParameterOutOfRange(
                    "V builtin \"energy-gap\" needs a chain with an energy function; \
                     use m2 or a vector file"
                        .into(),
                )
            })?;
            let min = h.iter().copied().fold(f64::INFINITY, f64::min);
            Ok(h.iter().map(|&e| e - min).collect())
        }
        path => crate::io::load_vector(path),
    }
}
