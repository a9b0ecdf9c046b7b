use alloc::vec::Vec;

use super::{DataSet, ModelError, Noise};
use crate::numerics::Real;

/// ARX orders: `n_a` output lags and input lags `0..=n_b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArxSpec {
    pub n_a: usize,
    pub n_b: usize,
}

impl ArxSpec {
    pub fn n_coeffs(&self) -> usize {
        self.n_a + self.n_b + 1
    }

    /// First (0-based) sample with a complete regressor.
    pub fn first_index(&self) -> usize {
        self.n_a.max(self.n_b)
    }

    pub fn coeff_names(&self) -> Vec<alloc::string::String> {
        use alloc::format;
        (1..=self.n_a)
            .map(|k| format!("a{k}"))
            .chain((0..=self.n_b).map(|k| format!("b{k}")))
            .collect()
    }

    fn check(&self, n_coeffs: usize, data: &DataSet) -> Result<(), ModelError> {
        if n_coeffs != self.n_coeffs() {
            return Err(ModelError::DimensionMismatch {
                expected: self.n_coeffs(),
                found: n_coeffs,
            });
        }
        let needed = self.first_index() + 1;
        if data.len() < needed {
            return Err(ModelError::InsufficientData {
                needed,
                got: data.len(),
            });
        }
        Ok(())
    }
}

/// Regressor `φ_t = [-y_{t-1} .. -y_{t-na}, u_t .. u_{t-nb}]`, so that
/// `ŷ_t = φ_tᵀ θ`.
pub fn arx_regressor(spec: &ArxSpec, data: &DataSet, t: usize) -> Vec<f64> {
    let y = data.y();
    let u = data.u();
    (1..=spec.n_a)
        .map(|k| -y[(t - k, 0)])
        .chain((0..=spec.n_b).map(|k| u[t - k]))
        .collect()
}

/// One-step-ahead predictions for `t = first_index() .. len()`.
pub fn arx_predict<T: Real>(spec: &ArxSpec, coeffs: &[T], data: &DataSet) -> Result<Vec<T>, ModelError> {
    spec.check(coeffs.len(), data)?;
    let y = data.y();
    let u = data.u();
    let (a, b) = coeffs.split_at(spec.n_a);
    Ok((spec.first_index()..data.len())
        .map(|t| {
            let mut acc = T::zero();
            for (k, ak) in a.iter().enumerate() {
                acc -= ak.clone() * y[(t - k - 1, 0)];
            }
            for (k, bk) in b.iter().enumerate() {
                acc += bk.clone() * u[t - k];
            }
            acc
        })
        .collect())
}

/// Conditional log-likelihood given the first `first_index()` samples.
pub fn arx_loglik<T: Real>(
    spec: &ArxSpec,
    coeffs: &[T],
    noise: &Noise<T>,
    data: &DataSet,
) -> Result<T, ModelError> {
    let pred = arx_predict(spec, coeffs, data)?;
    let y = data.y();
    let start = spec.first_index();
    Ok(noise.sum_logpdf(
        pred.into_iter()
            .enumerate()
            .map(|(i, p)| -p + y[(start + i, 0)]),
    ))
}
