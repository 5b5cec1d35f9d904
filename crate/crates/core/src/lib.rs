//! Markov chains on finite and continuous state spaces: structural analysis,
//! spectral convergence diagnostics, Lyapunov drift certificates, and
//! Metropolis-type samplers with variance-bounded Monte Carlo estimation.
//!
//! The crate is organized in layers:
//!
//! * [`markov`]: validated row-stochastic matrices, measure/function evolution,
//!   communication structure, invariant laws, hitting and return times,
//!   first-passage laws, and a product-chain coupling simulator.
//! * [`eigen`]: a dense real nonsymmetric eigensolver (Householder reduction
//!   to Hessenberg form followed by shifted QR with eigenvector accumulation).
//! * [`spectral`]: full spectra of stochastic matrices, spectral radius and
//!   gap, Dunford power reconstruction from spectral projectors, and the
//!   reversible-case convergence machinery in the pi-weighted inner product.
//! * [`lyapunov`]: generator drift analysis, Dynkin audits, drift and
//!   minorization certificates, and explicit Hairer-Mattingly contraction
//!   constants with sampled contraction audits.
//! * [`models`]: concrete chains with closed-form identities used as oracles
//!   (Ehrenfest urns, magnetization chain, knight moves, cycle walks, the
//!   integer walk, the Ising circle, droplet hitting chains, bigram text
//!   models).
//! * [`sampler`]: acceptance rules, Glauber and Kawasaki steps, MCMC
//!   estimators with batch-means variance, sample-size planners, hit-or-miss
//!   volume estimation, and base generators (inverse-CDF exponential,
//!   Box-Muller normal pairs).
//! * [`contkernel`]: continuous-state kernels on an interval, quadrature
//!   discretization, killed and potential kernels, Harris-recurrence
//!   diagnostics, and the AR(1) worked example with closed-form certificates.
//! * [`rng`]: seedable, splittable random streams with reproducible output
//!   independent of thread scheduling.
//!
//! Numerical conventions: measures are row vectors acting on the left
//! (`mu P`), observables are column vectors acted on from the right (`P f`),
//! and the generator is `L = P - I`.

#![warn(missing_docs)]

pub mod contkernel;
pub mod eigen;
pub mod lyapunov;
pub mod markov;
pub mod models;
pub mod rng;
pub mod sampler;
pub mod spectral;

mod error;

pub use error::{Error, Result};
