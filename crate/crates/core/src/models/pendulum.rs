//! Rotary inverted pendulum (Furuta type) driven by motor voltage.
//!
//! State `x = (θ, α, θ̇, α̇)`: arm angle, pendulum angle, and their rates.
//! Parameters `(J_r, J_p, k_m, R_m, D_p, D_r)`; mass and lengths are fixed.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::nlss::StateSpaceDynamics;
use super::ModelError;
use crate::numerics::Real;

pub const PENDULUM_PARAM_NAMES: [&str; 6] = ["J_r", "J_p", "k_m", "R_m", "D_p", "D_r"];

/// Quantities treated as known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulumConstants {
    /// Pendulum mass (kg).
    pub m_p: f64,
    /// Pendulum length (m).
    pub l_p: f64,
    /// Arm length (m).
    pub l_r: f64,
    pub g: f64,
}

impl Default for PendulumConstants {
    fn default() -> Self {
        PendulumConstants {
            m_p: 0.024,
            l_p: 0.129,
            l_r: 0.085,
            g: 9.81,
        }
    }
}

/// Generalized forces on the right-hand side: motor torque less arm
/// damping, and gravity less pendulum damping.
pub fn pendulum_forcing<T: Real>(x: &[T], v_m: f64, params: &[T], c: &PendulumConstants) -> [T; 2] {
    let (k_m, r_m, d_p, d_r) = (&params[2], &params[3], &params[4], &params[5]);
    let theta_dot = x[2].clone();
    let alpha_dot = x[3].clone();
    let motor = k_m.clone() * (-(k_m.clone() * theta_dot.clone()) + v_m) / r_m.clone();
    let tau_arm = motor - d_r.clone() * theta_dot;
    let tau_pend = x[1].clone().sin() * (-0.5 * c.m_p * c.l_p * c.g) - d_p.clone() * alpha_dot;
    [tau_arm, tau_pend]
}

fn mass_matrix<T: Real>(alpha: &T, params: &[T], c: &PendulumConstants) -> [T; 3] {
    let cos = alpha.clone().cos();
    let m11 = (-cos.clone().square() + 1.0) * (0.25 * c.m_p * c.l_p * c.l_p)
        + params[0].clone()
        + c.m_p * c.l_r * c.l_r;
    let m12 = cos * (0.5 * c.m_p * c.l_p * c.l_r);
    let m22 = params[1].clone() + 0.25 * c.m_p * c.l_p * c.l_p;
    [m11, m12, m22]
}

/// `ẋ` for the pendulum; the accelerations solve the 2×2 mass-matrix system.
pub fn pendulum_dynamics<T: Real>(
    x: &[T],
    v_m: f64,
    params: &[T],
    c: &PendulumConstants,
) -> Result<Vec<T>, ModelError> {
    let alpha = &x[1];
    let (theta_dot, alpha_dot) = (x[2].clone(), x[3].clone());
    let [m11, m12, m22] = mass_matrix(alpha, params, c);
    let (sin, cos) = (alpha.clone().sin(), alpha.clone().cos());

    let nu11 = sin.clone() * cos.clone() * alpha_dot.clone() * (0.5 * c.m_p * c.l_p * c.l_p);
    let nu12 = sin.clone() * alpha_dot.clone() * (-0.5 * c.m_p * c.l_p * c.l_r);
    let nu21 = cos * sin * theta_dot.clone() * (-0.25 * c.m_p * c.l_p * c.l_p);

    let [f1, f2] = pendulum_forcing(x, v_m, params, c);
    let r1 = f1 - nu11 * theta_dot.clone() - nu12 * alpha_dot.clone();
    let r2 = f2 - nu21 * theta_dot.clone();

    let det = m11.clone() * m22.clone() - m12.clone().square();
    if !(det.value() > 0.0) {
        return Err(ModelError::SingularMassMatrix);
    }
    let theta_ddot = (m22 * r1.clone() - m12.clone() * r2.clone()) / det.clone();
    let alpha_ddot = (m11 * r2 - m12 * r1) / det;
    Ok(vec![theta_dot, alpha_dot, theta_ddot, alpha_ddot])
}

/// Measured `(θ, α, I_m)` with `I_m = (V_m − k_m θ̇) / R_m`.
pub fn pendulum_measure<T: Real>(x: &[T], v_m: f64, params: &[T]) -> Vec<T> {
    let current = (-(params[2].clone() * x[2].clone()) + v_m) / params[3].clone();
    vec![x[0].clone(), x[1].clone(), current]
}

/// Kinetic plus potential energy of the mechanical part.
pub fn pendulum_energy(x: &[f64], params: &[f64], c: &PendulumConstants) -> f64 {
    let [m11, m12, m22] = mass_matrix(&x[1], params, c);
    let (td, ad) = (x[2], x[3]);
    let kinetic = 0.5 * (m11 * td * td + 2.0 * m12 * td * ad + m22 * ad * ad);
    kinetic - 0.5 * c.m_p * c.l_p * c.g * libm::cos(x[1])
}

/// Continuous-time pendulum as a state-space model.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pendulum {
    pub constants: PendulumConstants,
}

impl StateSpaceDynamics for Pendulum {
    fn state_dim(&self) -> usize {
        4
    }

    fn output_dim(&self) -> usize {
        3
    }

    fn param_dim(&self) -> usize {
        6
    }

    fn param_names(&self) -> Vec<String> {
        PENDULUM_PARAM_NAMES.iter().map(|s| String::from(*s)).collect()
    }

    fn vector_field<T: Real>(&self, x: &[T], u: f64, theta: &[T]) -> Result<Vec<T>, ModelError> {
        pendulum_dynamics(x, u, theta, &self.constants)
    }

    fn measure<T: Real>(&self, x: &[T], u: f64, theta: &[T]) -> Result<Vec<T>, ModelError> {
        Ok(pendulum_measure(x, u, theta))
    }
}
