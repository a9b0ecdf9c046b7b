//! Model structures and their log-likelihood contributions.
//!
//! Coefficient layouts used throughout:
//!
//! * ARX: `[a_1 .. a_na, b_0 .. b_nb]` with `A(q) y = B(q) u + e`;
//! * OE: `[b_0 .. b_nb, f_1 .. f_nf]` with `y = B(q)/F(q) u + e`.

mod arx;
mod data;
mod lgss;
mod nlss;
mod noise;
mod oe;
mod ode;
mod pendulum;
mod simulate;

pub use arx::{arx_loglik, arx_predict, arx_regressor, ArxSpec};
pub use data::DataSet;
pub use lgss::{kalman_loglik, Entry, LgssSpec};
pub use nlss::{
    nlss_logjoint, nlss_logjoint_gradient, nlss_logjoint_masked, Integrator, LinearScalarDynamics,
    NlssModel, NlssSpec, StateSpaceDynamics,
};
pub use noise::{gaussian_logpdf, studentt_logpdf, Noise, NoiseModel};
pub use oe::{oe_loglik, oe_predict, OeSpec};
pub use ode::rk4_step;
pub use pendulum::{
    pendulum_dynamics, pendulum_energy, pendulum_forcing, pendulum_measure, Pendulum,
    PendulumConstants, PENDULUM_PARAM_NAMES,
};
pub use simulate::{simulate, simulate_nlss, InputSignal, SimModel};

/// Signals beyond this magnitude are treated as a diverged simulation.
pub const INSTABILITY_THRESHOLD: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid data set: {0}")]
    InvalidData(&'static str),
    #[error("simulation diverged at sample {0}")]
    UnstableSimulation(usize),
    #[error("dynamics returned a non-finite value")]
    NonFiniteDynamics,
    #[error("pendulum mass matrix is singular")]
    SingularMassMatrix,
    #[error("parameter outside its domain: {0}")]
    DomainError(&'static str),
}
