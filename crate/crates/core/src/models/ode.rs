use alloc::vec::Vec;

use super::ModelError;
use crate::numerics::Real;

/// One classical Runge–Kutta step of `ẋ = f(x, u, θ)` with `u` held
/// constant over the step.
pub fn rk4_step<T, F>(f: F, x: &[T], u: f64, theta: &[T], dt: f64) -> Result<Vec<T>, ModelError>
where
    T: Real,
    F: Fn(&[T], f64, &[T]) -> Result<Vec<T>, ModelError>,
{
    let stage = |base: &[T], k: &[T], h: f64| -> Vec<T> {
        base.iter()
            .zip(k)
            .map(|(b, ki)| b.clone() + ki.clone() * h)
            .collect()
    };
    let k1 = f(x, u, theta)?;
    let k2 = f(&stage(x, &k1, 0.5 * dt), u, theta)?;
    let k3 = f(&stage(x, &k2, 0.5 * dt), u, theta)?;
    let k4 = f(&stage(x, &k3, dt), u, theta)?;
    let out: Vec<T> = (0..x.len())
        .map(|i| {
            let incr = k1[i].clone() + k2[i].clone() * 2.0 + k3[i].clone() * 2.0 + k4[i].clone();
            x[i].clone() + incr * (dt / 6.0)
        })
        .collect();
    if out.iter().any(|v| !v.value().is_finite()) {
        return Err(ModelError::NonFiniteDynamics);
    }
    Ok(out)
}
