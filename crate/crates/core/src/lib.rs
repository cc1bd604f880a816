//! Mean-field O(N) spin models on the complete graph.
//!
//! The Hamiltonian is `H_n(s) = -|S_n|^2 / (2n)` with `S_n = sum_i s_i`,
//! spins on the unit sphere in R^N (N = 1 is the two-point model, N = 2
//! the rotor model, N = 3 the classical Heisenberg model). The crate
//! provides:
//!
//! * [`specfun`]: modified Bessel functions of half-integer-step order
//!   and their ratios, the numeric bedrock for everything else;
//! * [`theory`]: exact formulas for the phase transition at `beta = N`:
//!   free energy, magnetization, rate function, fluctuation laws;
//! * [`sampler`]: Glauber dynamics whose single-site conditionals are
//!   exact von Mises-Fisher draws;
//! * [`stats`]: scaling statistics for the three regimes plus the
//!   empirical machinery (KS, Wasserstein-1, ESS) used to compare
//!   simulation with theory;
//! * [`oracle`]: slow, independent recomputations (power series, exact
//!   enumeration, dense quadrature, grid minimization) used to validate
//!   the fast paths.

mod error;
mod quad;

pub mod oracle;
pub mod sampler;
pub mod specfun;
pub mod stats;
pub mod theory;

pub use error::{Error, Result};
