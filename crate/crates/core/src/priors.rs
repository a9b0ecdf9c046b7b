//! Prior log-densities and the constraint transforms that map unconstrained
//! sampler coordinates onto constrained model parameters.

use crate::numerics::special::LN_2PI;
use crate::numerics::Real;

const LN_2_OVER_PI: f64 = -0.451_582_705_289_454_9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PriorError {
    #[error("prior scale must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("dimension mismatch: {0} weights vs {1} local scales")]
    DimensionMismatch(usize, usize),
    #[error("value {0} outside the density's support")]
    DomainError(f64),
}

/// Bijection from an unconstrained coordinate to a constrained parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transform {
    Identity,
    /// `η = exp(ζ)`.
    LogPositive,
    /// `η = lower + exp(ζ)`.
    ShiftedLog { lower: f64 },
}

impl Transform {
    /// Returns `(η, log|dη/dζ|)`.
    pub fn apply<T: Real>(&self, z: T) -> (T, T) {
        match *self {
            Transform::Identity => (z, T::zero()),
            Transform::LogPositive => (z.clone().exp(), z),
            Transform::ShiftedLog { lower } => (z.clone().exp() + lower, z),
        }
    }

    pub fn inverse(&self, eta: f64) -> f64 {
        match *self {
            Transform::Identity => eta,
            Transform::LogPositive => libm::log(eta),
            Transform::ShiftedLog { lower } => libm::log(eta - lower),
        }
    }

    pub fn forward(&self, z: f64) -> f64 {
        self.apply(z).0
    }
}

/// Prior family applied to a named parameter block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriorSpec {
    Gaussian { scale: f64 },
    Laplace { scale: f64 },
    /// Adds one log local scale per coordinate and one log global scale to
    /// the sampled space.
    Horseshoe,
    Gamma { shape: f64, rate: f64 },
    HalfCauchy { scale: f64 },
    Flat,
}

impl PriorSpec {
    pub const DEFAULT_GAUSSIAN_SCALE: f64 = 5.0;
    pub const DEFAULT_LAPLACE_SCALE: f64 = 2.0;

    pub fn validate(&self) -> Result<(), PriorError> {
        let positive = |v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(PriorError::NonPositiveScale(v))
            }
        };
        match *self {
            PriorSpec::Gaussian { scale }
            | PriorSpec::Laplace { scale }
            | PriorSpec::HalfCauchy { scale } => positive(scale),
            PriorSpec::Gamma { shape, rate } => positive(shape).and(positive(rate)),
            PriorSpec::Horseshoe | PriorSpec::Flat => Ok(()),
        }
    }
}

/// Independent zero-mean Gaussians with per-coordinate scales.
pub fn gaussian_logprior<T: Real>(eta: &[T], sigma: &[f64]) -> Result<T, PriorError> {
    if eta.len() != sigma.len() {
        return Err(PriorError::DimensionMismatch(eta.len(), sigma.len()));
    }
    let mut acc = T::zero();
    for (x, &s) in eta.iter().zip(sigma) {
        if !(s > 0.0) {
            return Err(PriorError::NonPositiveScale(s));
        }
        acc += x.clone().square() * (-0.5 / (s * s)) - (0.5 * LN_2PI + libm::log(s));
    }
    Ok(acc)
}

/// Independent zero-mean Laplace densities with common scale `b`.
/// The gradient at exactly zero is taken as 0.
pub fn laplace_logprior<T: Real>(eta: &[T], b: f64) -> Result<T, PriorError> {
    if !(b > 0.0) {
        return Err(PriorError::NonPositiveScale(b));
    }
    let norm = libm::log(2.0 * b);
    let mut acc = T::zero();
    for x in eta {
        let v = x.value();
        let abs = if v > 0.0 {
            x.clone()
        } else if v < 0.0 {
            -x.clone()
        } else {
            T::zero()
        };
        acc += abs / (-b) - norm;
    }
    Ok(acc)
}

/// Standard half-Cauchy log-density on `x > 0`.
pub fn halfcauchy_logpdf<T: Real>(x: T) -> T {
    -(x.square()).ln_1p() + LN_2_OVER_PI
}

/// Half-Cauchy with scale `s`.
pub fn halfcauchy_scaled_logpdf<T: Real>(x: T, s: f64) -> T {
    halfcauchy_logpdf(x / s) - libm::log(s)
}

/// Horseshoe joint log-density over weights, log local scales and the log
/// global scale, including the log-Jacobians of both exp maps.
pub fn horseshoe_logjoint<T: Real>(w: &[T], log_beta: &[T], log_tau: T) -> Result<T, PriorError> {
    if w.len() != log_beta.len() {
        return Err(PriorError::DimensionMismatch(w.len(), log_beta.len()));
    }
    let mut acc = halfcauchy_logpdf(log_tau.clone().exp()) + log_tau.clone();
    for (wi, lb) in w.iter().zip(log_beta) {
        let log_scale = lb.clone() + log_tau.clone();
        // N(w | 0, exp(log_scale)^2)
        let z = wi.clone() * (-log_scale.clone()).exp();
        acc += z.square() * (-0.5) - log_scale - 0.5 * LN_2PI;
        acc += halfcauchy_logpdf(lb.clone().exp()) + lb.clone();
    }
    Ok(acc)
}

/// Shape–rate Gamma log-density.
pub fn gamma_logpdf<T: Real>(x: T, shape: f64, rate: f64) -> Result<T, PriorError> {
    if !(shape > 0.0) {
        return Err(PriorError::NonPositiveScale(shape));
    }
    if !(rate > 0.0) {
        return Err(PriorError::NonPositiveScale(rate));
    }
    if !(x.value() > 0.0) {
        return Err(PriorError::DomainError(x.value()));
    }
    let norm = shape * libm::log(rate) - libm::lgamma(shape);
    Ok(x.clone().ln() * (shape - 1.0) - x * rate + norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{dual_eval, fd_gradient, relative_error, Dual, RngStream};
    use proptest::prelude::*;
    use std::vec::Vec;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn gaussian_values_and_gradient() {
        let v: f64 = gaussian_logprior(&[0.0], &[1.0]).unwrap();
        assert!((v + 0.918_938_5).abs() < 1e-7);
        let v: f64 = gaussian_logprior(&[1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert!((v + 2.837_877_1).abs() < 1e-7);
        assert!(gaussian_logprior(&[1.0], &[0.0]).is_err());

        let mut rng = RngStream::new(4, 0);
        let sigma = [0.5, 2.0, 1.3];
        for _ in 0..10 {
            let eta = rng.standard_normal_vec(3);
            let (_, g) = dual_eval(|x| gaussian_logprior(x, &sigma).unwrap(), &eta).unwrap();
            let analytic: Vec<f64> = eta.iter().zip(&sigma).map(|(e, s)| -e / (s * s)).collect();
            let fd = fd_gradient(|x| gaussian_logprior(x, &sigma).unwrap(), &eta, 1e-5).unwrap();
            assert!(relative_error(&g, &analytic) < 1e-14);
            assert!(relative_error(&fd, &analytic) < 1e-6);
        }
    }

    #[test]
    fn laplace_values_subgradient_and_normalization() {
        let v: f64 = laplace_logprior(&[0.0], 1.0).unwrap();
        assert!((v + core::f64::consts::LN_2).abs() < 1e-12);
        let v: f64 = laplace_logprior(&[2.0], 1.0).unwrap();
        assert!((v + core::f64::consts::LN_2 + 2.0).abs() < 1e-12);
        let (_, g) = dual_eval(|x| laplace_logprior(x, 1.0).unwrap(), &[0.0, 0.5, -0.5]).unwrap();
        assert_eq!(g, [0.0, -1.0, 1.0]);
        let z = simpson(|x| libm::exp(laplace_logprior(&[x], 1.0).unwrap()), -20.0, 0.0, 20_000)
            + simpson(|x| libm::exp(laplace_logprior(&[x], 1.0).unwrap()), 0.0, 20.0, 20_000);
        assert!((z - 1.0).abs() < 1e-6, "{z}");
        assert!(laplace_logprior(&[1.0], -1.0).is_err());
    }

    #[test]
    fn halfcauchy_values_and_heavy_tail_normalization() {
        let v: f64 = halfcauchy_logpdf(1.0);
        assert!((v + 1.144_729_9).abs() < 1e-7);
        let v: f64 = halfcauchy_logpdf(1e-300);
        assert!((v + 0.451_582_7).abs() < 1e-7);
        // Substitute x = t / (1 - t) to integrate over (0, 1e4) smoothly.
        let upper_t = 1e4 / (1.0 + 1e4);
        let z = simpson(
            |t| {
                let x = t / (1.0 - t);
                libm::exp(halfcauchy_logpdf(x)) / ((1.0 - t) * (1.0 - t))
            },
            0.0,
            upper_t,
            200_000,
        );
        // Mass beyond 1e4 is 1 - (2/π) atan(1e4) ≈ 6.4e-5.
        assert!((z - 1.0).abs() < 1e-4, "{z}");
    }

    #[test]
    fn horseshoe_mode_value_and_gradient() {
        let v: f64 = horseshoe_logjoint(&[0.0], &[0.0], 0.0).unwrap();
        assert!((v + 3.208_398_4).abs() < 1e-7);
        assert!(horseshoe_logjoint(&[0.0, 1.0], &[0.0], 0.0).is_err());

        let mut rng = RngStream::new(9, 0);
        let d = 4;
        let f = |x: &[Dual]| horseshoe_logjoint(&x[..d], &x[d..2 * d], x[2 * d].clone()).unwrap();
        let fr = |x: &[f64]| horseshoe_logjoint(&x[..d], &x[d..2 * d], x[2 * d]).unwrap();
        for _ in 0..10 {
            let x = rng.standard_normal_vec(2 * d + 1);
            let (_, g) = dual_eval(f, &x).unwrap();
            let fd = fd_gradient(fr, &x, 1e-5).unwrap();
            assert!(relative_error(&g, &fd) < 1e-5);
        }
    }

    #[test]
    fn horseshoe_gaussian_term_is_scale_shift_invariant() {
        // Shifting c from the global scale into the local scales leaves the
        // conditional Gaussian term unchanged; only the half-Cauchy pieces move.
        let w = [0.4, -1.2];
        let lb = [0.1, -0.3];
        let lt = 0.2;
        let c = 0.3;
        let gauss = |lb: &[f64], lt: f64| -> f64 {
            w.iter()
                .zip(lb)
                .map(|(wi, b)| {
                    let s = libm::exp(b + lt);
                    -0.5 * (wi / s) * (wi / s) - libm::log(s) - 0.5 * LN_2PI
                })
                .sum()
        };
        let shifted: Vec<f64> = lb.iter().map(|b| b + c).collect();
        assert!((gauss(&lb, lt) - gauss(&shifted, lt - c)).abs() < 1e-14);
        let hc = |lb: &[f64], lt: f64| -> f64 {
            halfcauchy_logpdf(libm::exp(lt))
                + lt
                + lb.iter().map(|b| halfcauchy_logpdf(libm::exp(*b)) + b).sum::<f64>()
        };
        let full = |lb: &[f64], lt: f64| horseshoe_logjoint(&w, lb, lt).unwrap();
        assert!((full(&lb, lt) - gauss(&lb, lt) - hc(&lb, lt)).abs() < 1e-12);
        assert!((full(&lb, lt) - full(&shifted, lt - c)).abs() > 1e-3);
    }

    #[test]
    fn gamma_values_mode_and_domain() {
        let v: f64 = gamma_logpdf(10.0, 2.0, 0.1).unwrap();
        assert!((v - libm::log(0.01 * 10.0 * libm::exp(-1.0))).abs() < 1e-12);
        assert!((v + 3.302_585_1).abs() < 1e-7);
        let v: f64 = gamma_logpdf(0.5, 1.0, 1.0).unwrap();
        assert!((v + 0.5).abs() < 1e-12);
        assert!(gamma_logpdf(0.0, 2.0, 0.1).is_err());

        let best = (1..=100_000)
            .map(|i| i as f64 * 1e-3)
            .max_by(|a, b| {
                let fa: f64 = gamma_logpdf(*a, 2.0, 0.1).unwrap();
                let fb: f64 = gamma_logpdf(*b, 2.0, 0.1).unwrap();
                fa.partial_cmp(&fb).unwrap()
            })
            .unwrap();
        assert!((best - 10.0).abs() < 1e-3);
    }

    #[test]
    fn one_dimensional_priors_integrate_to_one() {
        let g = simpson(|x| libm::exp(gaussian_logprior(&[x], &[1.7]).unwrap()), -30.0, 30.0, 20_000);
        assert!((g - 1.0).abs() < 1e-4);
        let ga = simpson(|x| libm::exp(gamma_logpdf(x, 2.0, 0.1).unwrap()), 1e-12, 600.0, 200_000);
        assert!((ga - 1.0).abs() < 1e-4, "{ga}");
    }

    #[test]
    fn transform_examples() {
        assert_eq!(Transform::LogPositive.apply(0.0), (1.0, 0.0));
        assert_eq!(Transform::ShiftedLog { lower: 1.0 }.apply(0.0), (2.0, 0.0));
        assert_eq!(Transform::Identity.apply(-3.7), (-3.7, 0.0));
    }

    #[test]
    fn transform_log_jacobian_matches_derivative() {
        for t in [Transform::Identity, Transform::LogPositive, Transform::ShiftedLog { lower: 1.0 }] {
            for &z in &[-2.0, 0.3, 4.0] {
                let (_, lj) = t.apply(z);
                let d = fd_gradient(|x| t.forward(x[0]), &[z], 1e-6).unwrap()[0];
                assert!((libm::log(d) - lj).abs() < 1e-8);
            }
        }
    }

    proptest! {
        #[test]
        fn transform_round_trip(z in -30.0f64..30.0) {
            for t in [Transform::Identity, Transform::LogPositive] {
                let back = t.inverse(t.forward(z));
                prop_assert!((back - z).abs() < 1e-12, "{:?} {} {}", t, z, back);
            }
        }

        // Below about -5, `lower + exp(z)` absorbs the low bits of exp(z).
        #[test]
        fn shifted_transform_round_trip(z in -5.0f64..30.0) {
            let t = Transform::ShiftedLog { lower: 1.0 };
            let back = t.inverse(t.forward(z));
            prop_assert!((back - z).abs() < 1e-12, "{} {}", z, back);
        }

        #[test]
        fn gradients_match_fd_away_from_kinks(x in proptest::collection::vec(0.1f64..3.0, 1..5),
                                             signs in proptest::collection::vec(any::<bool>(), 5)) {
            let eta: Vec<f64> = x.iter().zip(&signs).map(|(v, s)| if *s { *v } else { -*v }).collect();
            let (_, g) = dual_eval(|v| laplace_logprior(v, 2.0).unwrap(), &eta).unwrap();
            let fd = fd_gradient(|v| laplace_logprior(v, 2.0).unwrap(), &eta, 1e-6).unwrap();
            prop_assert!(relative_error(&g, &fd) < 1e-5);
            let (_, g) = dual_eval(|v| gamma_logpdf(v[0].clone(), 2.0, 0.1).unwrap(), &[x[0]]).unwrap();
            let fd = fd_gradient(|v| gamma_logpdf(v[0], 2.0, 0.1).unwrap(), &[x[0]], 1e-6).unwrap();
            prop_assert!(relative_error(&g, &fd) < 1e-5);
        }
    }
}
