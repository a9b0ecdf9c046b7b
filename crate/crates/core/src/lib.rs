//! Bayesian system identification by Markov-chain Monte Carlo.
//!
//! The crate is `no_std` (with `alloc`). It provides:
//!
//! * [`numerics`]: dense linear algebra, forward-mode dual numbers, seeded
//!   random streams and a finite-difference gradient oracle;
//! * [`priors`]: prior log-densities and constraint transforms;
//! * [`models`]: ARX, output-error, linear Gaussian state-space and
//!   nonlinear state-space likelihoods plus data simulators;
//! * [`posterior`]: parameter spaces and assembled log-posterior targets;
//! * [`samplers`]: random-walk Metropolis–Hastings, mMALA and Hamiltonian
//!   Monte Carlo with warm-up adaptation;
//! * [`diagnostics`]: autocorrelation, IACT/ESS, summaries, model fit and
//!   frequency responses.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod numerics;
pub mod priors;
pub mod models;
pub mod posterior;
pub mod samplers;
pub mod diagnostics;
