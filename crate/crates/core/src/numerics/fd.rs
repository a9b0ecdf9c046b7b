use alloc::vec::Vec;

use super::dual::Dual;
use super::NumericsError;

/// Central-difference gradient with the same step `h` on every coordinate.
pub fn fd_gradient<F>(f: F, x: &[f64], h: f64) -> Result<Vec<f64>, NumericsError>
where
    F: Fn(&[f64]) -> f64,
{
    fd_gradient_with(f, x, |_| h)
}

/// Central differences with step `h * max(1, |x_i|)` per coordinate.
pub fn fd_gradient_scaled<F>(f: F, x: &[f64], h: f64) -> Result<Vec<f64>, NumericsError>
where
    F: Fn(&[f64]) -> f64,
{
    fd_gradient_with(f, x, |xi| h * xi.abs().max(1.0))
}

fn fd_gradient_with<F, S>(f: F, x: &[f64], step: S) -> Result<Vec<f64>, NumericsError>
where
    F: Fn(&[f64]) -> f64,
    S: Fn(f64) -> f64,
{
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let hi = step(x[i]);
        probe[i] = x[i] + hi;
        let up = f(&probe);
        probe[i] = x[i] - hi;
        let down = f(&probe);
        probe[i] = x[i];
        if !up.is_finite() || !down.is_finite() {
            return Err(NumericsError::NonFiniteEvaluation { index: i });
        }
        grad.push((up - down) / (2.0 * hi));
    }
    Ok(grad)
}

/// Evaluates `f` on seeded duals and returns the value and exact gradient.
pub fn dual_eval<F>(f: F, x: &[f64]) -> Result<(f64, Vec<f64>), NumericsError>
where
    F: Fn(&[Dual]) -> Dual,
{
    let out = f(&Dual::seed(x));
    let grad: Vec<f64> = (0..x.len()).map(|i| out.d(i)).collect();
    if !out.value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(NumericsError::NonFiniteEvaluation { index: 0 });
    }
    Ok((out.value, grad))
}

/// Max over coordinates of `|a - b| / max(1, |b|)`.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(1.0))
        .fold(0.0, f64::max)
}
