//! Nonlinear state-space models with the state trajectory treated as
//! unknowns alongside the parameters.
//!
//! ```text
//! x_t = f(x_{t-1}, u_{t-1}, θ) + w_t,   w_t ~ N(0, diag(q)^2)
//! y_t = g(x_t, u_t, θ) + v_t,           v_t ~ N(0, diag(r)^2)
//! x_1 ~ N(m_0, diag(s_0)^2)
//! ```
//!
//! `f` is either a discrete map or an RK4 discretization of a vector field
//! over one sampling interval.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{gaussian_logpdf, rk4_step, DataSet, ModelError, Pendulum};
use crate::numerics::{Dual, Real};

/// Dynamics and measurement map, evaluable on any [`Real`].
pub trait StateSpaceDynamics {
    fn state_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn param_dim(&self) -> usize;
    fn param_names(&self) -> Vec<String>;
    /// Right-hand side `ẋ` for [`Integrator::Rk4`]; the next state for
    /// [`Integrator::Discrete`].
    fn vector_field<T: Real>(&self, x: &[T], u: f64, theta: &[T]) -> Result<Vec<T>, ModelError>;
    fn measure<T: Real>(&self, x: &[T], u: f64, theta: &[T]) -> Result<Vec<T>, ModelError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    Discrete,
    Rk4 { substeps: usize },
}

/// Scalar linear system `x ← a·x + b·u`, `y = c·x`, with `θ = (a, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearScalarDynamics {
    pub c: f64,
}

impl StateSpaceDynamics for LinearScalarDynamics {
    fn state_dim(&self) -> usize {
        1
    }

    fn output_dim(&self) -> usize {
        1
    }

    fn param_dim(&self) -> usize {
        2
    }

    fn param_names(&self) -> Vec<String> {
        vec![String::from("a"), String::from("b")]
    }

    fn vector_field<T: Real>(&self, x: &[T], u: f64, theta: &[T]) -> Result<Vec<T>, ModelError> {
        Ok(vec![theta[0].clone() * x[0].clone() + theta[1].clone() * u])
    }

    fn measure<T: Real>(&self, x: &[T], _u: f64, _theta: &[T]) -> Result<Vec<T>, ModelError> {
        Ok(vec![x[0].clone() * self.c])
    }
}

/// The built-in nonlinear models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NlssModel {
    Pendulum(Pendulum),
    Linear(LinearScalarDynamics),
}

impl StateSpaceDynamics for NlssModel {
    fn state_dim(&self) -> usize {
        match self {
            NlssModel::Pendulum(m) => m.state_dim(),
            NlssModel::Linear(m) => m.state_dim(),
        }
    }

    fn output_dim(&self) -> usize {
        match self {
            NlssModel::Pendulum(m) => m.output_dim(),
            NlssModel::Linear(m) => m.output_dim(),
        }
    }

    fn param_dim(&self) -> usize {
        match self {
            NlssModel::Pendulum(m) => m.param_dim(),
            NlssModel::Linear(m) => m.param_dim(),
        }
    }

    fn param_names(&self) -> Vec<String> {
        match self {
            NlssModel::Pendulum(m) => m.param_names(),
            NlssModel::Linear(m) => m.param_names(),
        }
    }

    fn vector_field<T: Real>(&self, x: &[T], u: f64, theta: &[T]) -> Result<Vec<T>, ModelError> {
        match self {
            NlssModel::Pendulum(m) => m.vector_field(x, u, theta),
            NlssModel::Linear(m) => m.vector_field(x, u, theta),
        }
    }

    fn measure<T: Real>(&self, x: &[T], u: f64, theta: &[T]) -> Result<Vec<T>, ModelError> {
        match self {
            NlssModel::Pendulum(m) => m.measure(x, u, theta),
            NlssModel::Linear(m) => m.measure(x, u, theta),
        }
    }
}

/// Model plus fixed noise scales and initial-state prior.
#[derive(Debug, Clone, PartialEq)]
pub struct NlssSpec<D = NlssModel> {
    pub dynamics: D,
    pub process_sd: Vec<f64>,
    pub measurement_sd: Vec<f64>,
    pub integrator: Integrator,
    pub initial_mean: Vec<f64>,
    pub initial_sd: Vec<f64>,
}

impl<D: StateSpaceDynamics> NlssSpec<D> {
    pub fn validate(&self) -> Result<(), ModelError> {
        let n_x = self.dynamics.state_dim();
        for (found, expected) in [
            (self.process_sd.len(), n_x),
            (self.initial_mean.len(), n_x),
            (self.initial_sd.len(), n_x),
            (self.measurement_sd.len(), self.dynamics.output_dim()),
        ] {
            if found != expected {
                return Err(ModelError::DimensionMismatch { expected, found });
            }
        }
        let scales = self.process_sd.iter().chain(&self.measurement_sd).chain(&self.initial_sd);
        if scales.clone().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(ModelError::DomainError("noise scales must be positive"));
        }
        if let Integrator::Rk4 { substeps: 0 } = self.integrator {
            return Err(ModelError::DomainError("rk4 needs at least one substep"));
        }
        Ok(())
    }

    /// State one sampling interval `dt` after `x` under input `u`.
    pub fn transition<T: Real>(&self, x: &[T], u: f64, theta: &[T], dt: f64) -> Result<Vec<T>, ModelError> {
        match self.integrator {
            Integrator::Discrete => self.dynamics.vector_field(x, u, theta),
            Integrator::Rk4 { substeps } => {
                let h = dt / substeps as f64;
                let mut state = x.to_vec();
                for _ in 0..substeps {
                    state = rk4_step(|x, u, p| self.dynamics.vector_field(x, u, p), &state, u, theta, h)?;
                }
                Ok(state)
            }
        }
    }

    fn check_shapes(&self, n_theta: usize, n_states: usize, data: &DataSet) -> Result<(), ModelError> {
        self.validate()?;
        let expected = [
            (n_theta, self.dynamics.param_dim()),
            (n_states, data.len() * self.dynamics.state_dim()),
            (data.n_outputs(), self.dynamics.output_dim()),
        ];
        for (found, expected) in expected {
            if found != expected {
                return Err(ModelError::DimensionMismatch { expected, found });
            }
        }
        Ok(())
    }

    fn initial_term<T: Real>(&self, x1: &[T]) -> T {
        let mut acc = T::zero();
        for i in 0..x1.len() {
            acc += gaussian_logpdf(x1[i].clone() - self.initial_mean[i], T::from_f64(self.initial_sd[i]));
        }
        acc
    }

    fn transition_term<T: Real>(&self, prev: &[T], next: &[T], u: f64, theta: &[T], dt: f64) -> T {
        match self.transition(prev, u, theta, dt) {
            Ok(pred) => {
                let mut acc = T::zero();
                for i in 0..next.len() {
                    acc += gaussian_logpdf(next[i].clone() - pred[i].clone(), T::from_f64(self.process_sd[i]));
                }
                acc
            }
            Err(_) => T::from_f64(f64::NEG_INFINITY),
        }
    }

    fn measurement_term<T: Real>(&self, x: &[T], u: f64, y: &[f64], theta: &[T]) -> T {
        match self.dynamics.measure(x, u, theta) {
            Ok(pred) => {
                let mut acc = T::zero();
                for i in 0..y.len() {
                    acc += gaussian_logpdf(-pred[i].clone() + y[i], T::from_f64(self.measurement_sd[i]));
                }
                acc
            }
            Err(_) => T::from_f64(f64::NEG_INFINITY),
        }
    }
}

/// `log p(y_{1:N}, x_{1:N} | θ)` with `states` stored row-major (`N × n_x`).
///
/// Dynamics failures (singular mass matrix, non-finite values) give `-inf`.
pub fn nlss_logjoint<D: StateSpaceDynamics, T: Real>(
    spec: &NlssSpec<D>,
    theta: &[T],
    states: &[T],
    data: &DataSet,
) -> Result<T, ModelError> {
    let observed = vec![true; data.len()];
    nlss_logjoint_masked(spec, theta, states, data, &observed)
}

/// As [`nlss_logjoint`], keeping only the measurement terms with
/// `observed[t]`.
pub fn nlss_logjoint_masked<D: StateSpaceDynamics, T: Real>(
    spec: &NlssSpec<D>,
    theta: &[T],
    states: &[T],
    data: &DataSet,
    observed: &[bool],
) -> Result<T, ModelError> {
    spec.check_shapes(theta.len(), states.len(), data)?;
    if observed.len() != data.len() {
        return Err(ModelError::DimensionMismatch {
            expected: data.len(),
            found: observed.len(),
        });
    }
    let n_x = spec.dynamics.state_dim();
    let u = data.u();
    let row = |t: usize| &states[t * n_x..(t + 1) * n_x];
    let mut acc = spec.initial_term(row(0));
    for t in 0..data.len() {
        if t > 0 {
            acc += spec.transition_term(row(t - 1), row(t), u[t - 1], theta, data.dt());
        }
        if observed[t] {
            acc += spec.measurement_term(row(t), u[t], data.y_at(t), theta);
        }
        if acc.value() == f64::NEG_INFINITY {
            return Ok(acc);
        }
    }
    Ok(acc)
}

/// Value and gradient of [`nlss_logjoint`], evaluated term by term.
///
/// `theta` carries tangents over the caller's own directions (for example
/// the unconstrained coordinates behind a transform). Returns the value,
/// the gradient along those directions, and the gradient with respect to
/// `states`. Each term is differentiated over its own local coordinates
/// only, so the cost is linear in `N`.
pub fn nlss_logjoint_gradient<D: StateSpaceDynamics>(
    spec: &NlssSpec<D>,
    theta: &[Dual],
    states: &[f64],
    data: &DataSet,
) -> Result<(f64, Vec<f64>, Vec<f64>), ModelError> {
    spec.check_shapes(theta.len(), states.len(), data)?;
    let n_x = spec.dynamics.state_dim();
    let n_dir = theta.iter().map(|d| d.tangent.len()).max().unwrap_or(0);
    let u = data.u();
    let mut g_theta = vec![0.0; n_dir];
    let mut g_x = vec![0.0; states.len()];
    let seed = |t: usize, offset: usize, width: usize| -> Vec<Dual> {
        (0..n_x)
            .map(|i| Dual::variable(states[t * n_x + i], offset + i, width))
            .collect()
    };
    let scatter = |term: &Dual, blocks: &[(usize, usize)], g_theta: &mut [f64], g_x: &mut [f64]| {
        for (k, gt) in g_theta.iter_mut().enumerate() {
            *gt += term.d(k);
        }
        for &(t, offset) in blocks {
            for i in 0..n_x {
                g_x[t * n_x + i] += term.d(offset + i);
            }
        }
    };

    let x1: Vec<Dual> = seed(0, 0, n_x);
    let init = spec.initial_term(&x1);
    let mut value = init.value;
    for i in 0..n_x {
        g_x[i] += init.d(i);
    }

    for t in 0..data.len() {
        if t > 0 {
            let width = n_dir + 2 * n_x;
            let prev = seed(t - 1, n_dir, width);
            let next = seed(t, n_dir + n_x, width);
            let term = spec.transition_term(&prev, &next, u[t - 1], theta, data.dt());
            value += term.value;
            scatter(&term, &[(t - 1, n_dir), (t, n_dir + n_x)], &mut g_theta, &mut g_x);
        }
        let x = seed(t, n_dir, n_dir + n_x);
        let term = spec.measurement_term(&x, u[t], data.y_at(t), theta);
        value += term.value;
        scatter(&term, &[(t, n_dir)], &mut g_theta, &mut g_x);
        if value == f64::NEG_INFINITY {
            return Ok((value, vec![0.0; n_dir], vec![0.0; states.len()]));
        }
    }
    Ok((value, g_theta, g_x))
}
