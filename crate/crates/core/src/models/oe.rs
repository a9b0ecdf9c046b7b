use alloc::vec::Vec;

use super::{DataSet, ModelError, Noise, INSTABILITY_THRESHOLD};
use crate::numerics::Real;

/// Output-error orders: input lags `0..=n_b`, denominator lags `1..=n_f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OeSpec {
    pub n_b: usize,
    pub n_f: usize,
}

impl OeSpec {
    pub fn n_coeffs(&self) -> usize {
        self.n_b + 1 + self.n_f
    }

    pub fn coeff_names(&self) -> Vec<alloc::string::String> {
        use alloc::format;
        (0..=self.n_b)
            .map(|k| format!("b{k}"))
            .chain((1..=self.n_f).map(|k| format!("f{k}")))
            .collect()
    }
}

/// Simulated output of `B(q)/F(q)` from zero initial conditions.
pub fn oe_predict<T: Real>(spec: &OeSpec, coeffs: &[T], data: &DataSet) -> Result<Vec<T>, ModelError> {
    if coeffs.len() != spec.n_coeffs() {
        return Err(ModelError::DimensionMismatch {
            expected: spec.n_coeffs(),
            found: coeffs.len(),
        });
    }
    let (b, f) = coeffs.split_at(spec.n_b + 1);
    let u = data.u();
    let mut out: Vec<T> = Vec::with_capacity(u.len());
    for t in 0..u.len() {
        let mut acc = T::zero();
        for (k, bk) in b.iter().enumerate().take(t + 1) {
            acc += bk.clone() * u[t - k];
        }
        for (k, fk) in f.iter().enumerate().take(t) {
            acc -= fk.clone() * out[t - k - 1].clone();
        }
        out.push(acc);
    }
    Ok(out)
}

/// Log-likelihood over all samples; `-inf` once the simulated output leaves
/// `±INSTABILITY_THRESHOLD`.
pub fn oe_loglik<T: Real>(spec: &OeSpec, coeffs: &[T], noise: &Noise<T>, data: &DataSet) -> Result<T, ModelError> {
    let pred = oe_predict(spec, coeffs, data)?;
    if pred
        .iter()
        .any(|p| !(p.value().abs() <= INSTABILITY_THRESHOLD))
    {
        return Ok(T::from_f64(f64::NEG_INFINITY));
    }
    let y = data.y();
    Ok(noise.sum_logpdf(pred.into_iter().enumerate().map(|(t, p)| -p + y[(t, 0)])))
}
