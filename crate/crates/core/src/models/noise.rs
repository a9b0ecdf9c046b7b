use super::ModelError;
use crate::numerics::special::LN_2PI;
use crate::numerics::{Real, RngStream};

/// Additive noise density with (possibly dual-valued) parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Noise<T> {
    Gaussian { sigma: T },
    StudentT { nu: T, sigma: T },
}

/// Noise model with fixed parameters.
pub type NoiseModel = Noise<f64>;

impl<T: Real> Noise<T> {
    pub fn sigma(&self) -> &T {
        match self {
            Noise::Gaussian { sigma } | Noise::StudentT { sigma, .. } => sigma,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.sigma().value() > 0.0) {
            return Err(ModelError::DomainError("noise scale must be positive"));
        }
        if let Noise::StudentT { nu, .. } = self {
            if !(nu.value() >= 1.0) {
                return Err(ModelError::DomainError("degrees of freedom must be >= 1"));
            }
        }
        Ok(())
    }

    pub fn logpdf(&self, e: T) -> T {
        match self {
            Noise::Gaussian { sigma } => gaussian_logpdf(e, sigma.clone()),
            Noise::StudentT { nu, sigma } => studentt_kernel(e, nu.clone(), sigma.clone()),
        }
    }

    /// Sum of `logpdf(e_i)` with the normalizing constants hoisted out of
    /// the loop.
    pub fn sum_logpdf(&self, residuals: impl Iterator<Item = T>) -> T {
        match self {
            Noise::Gaussian { sigma } => {
                let mut ss = T::zero();
                let mut n = 0usize;
                for e in residuals {
                    ss += e.square();
                    n += 1;
                }
                let inv_var = (sigma.clone().square()).powf(-1.0);
                ss * inv_var * (-0.5) - (sigma.clone().ln() + 0.5 * LN_2PI) * n as f64
            }
            Noise::StudentT { nu, sigma } => {
                let mut acc = T::zero();
                let mut n = 0usize;
                let scale = (sigma.clone().square() * nu.clone()).powf(-1.0);
                for e in residuals {
                    acc += (e.square() * scale.clone()).ln_1p();
                    n += 1;
                }
                let half_nu1 = (nu.clone() + 1.0) * 0.5;
                let norm = half_nu1.clone().ln_gamma()
                    - (nu.clone() * 0.5).ln_gamma()
                    - (nu.clone() * core::f64::consts::PI).ln() * 0.5
                    - sigma.clone().ln();
                norm * n as f64 - half_nu1 * acc
            }
        }
    }
}

impl NoiseModel {
    pub fn draw(&self, rng: &mut RngStream) -> f64 {
        match *self {
            Noise::Gaussian { sigma } => sigma * rng.standard_normal(),
            Noise::StudentT { nu, sigma } => sigma * rng.student_t(nu),
        }
    }
}

pub fn gaussian_logpdf<T: Real>(e: T, sigma: T) -> T {
    let z = e / sigma.clone();
    z.square() * (-0.5) - sigma.ln() - 0.5 * LN_2PI
}

fn studentt_kernel<T: Real>(e: T, nu: T, sigma: T) -> T {
    let half_nu1 = (nu.clone() + 1.0) * 0.5;
    let z = e / sigma.clone();
    half_nu1.clone().ln_gamma()
        - (nu.clone() * 0.5).ln_gamma()
        - (nu.clone() * core::f64::consts::PI).ln() * 0.5
        - sigma.ln()
        - half_nu1 * (z.square() / nu).ln_1p()
}

/// Location-zero Student-t log-density with `nu` degrees of freedom and
/// scale `sigma`.
pub fn studentt_logpdf<T: Real>(e: T, nu: T, sigma: T) -> Result<T, ModelError> {
    if !(nu.value() >= 1.0) {
        return Err(ModelError::DomainError("degrees of freedom must be >= 1"));
    }
    if !(sigma.value() > 0.0) {
        return Err(ModelError::DomainError("noise scale must be positive"));
    }
    Ok(studentt_kernel(e, nu, sigma))
}
