use alloc::vec;
use alloc::vec::Vec;

use super::TargetDensity;
use crate::numerics::special::LN_2PI;
use crate::numerics::{Matrix, RngStream};

/// Eigenvalue floor applied to the negative Hessian in mMALA.
pub const HESSIAN_FLOOR: f64 = 1e-6;

/// Random-walk Metropolis step `ζ* = ζ + ε·L·z`. Returns the new state,
/// its log-density, whether the proposal was accepted, and the acceptance
/// probability.
pub fn mh_step<T: TargetDensity + ?Sized>(
    target: &T,
    z: &[f64],
    log_density: f64,
    step: f64,
    chol: &Matrix,
    rng: &mut RngStream,
) -> (Vec<f64>, f64, bool, f64) {
    let noise = rng.standard_normal_vec(z.len());
    let u = rng.uniform();
    let shift = chol.mul_vec(&noise).expect("conformable proposal factor");
    let proposal: Vec<f64> = z.iter().zip(&shift).map(|(a, b)| a + step * b).collect();
    let lp = target.log_density(&proposal);
    let accept_prob = if lp.is_nan() { 0.0 } else { libm::exp(lp - log_density).min(1.0) };
    if u < accept_prob {
        (proposal, lp, true, accept_prob)
    } else {
        (z.to_vec(), log_density, false, accept_prob)
    }
}

/// A position with the local quantities mMALA needs: gradient and the
/// eigen-decomposition of the metric built from the negative Hessian.
#[derive(Debug, Clone, PartialEq)]
pub struct MmalaPoint {
    pub z: Vec<f64>,
    pub log_density: f64,
    pub gradient: Vec<f64>,
    /// Eigenvalues of the metric: `|λ|` of `−∇² log π`, floored.
    pub eigenvalues: Vec<f64>,
    /// Corresponding eigenvectors as columns.
    pub eigenvectors: Matrix,
}

impl MmalaPoint {
    /// Evaluates the density, gradient and a central-difference Hessian of
    /// the gradient at `z`. Non-finite stencils fall back to the identity
    /// metric.
    pub fn new<T: TargetDensity + ?Sized>(target: &T, z: Vec<f64>) -> Self {
        let d = z.len();
        let (log_density, gradient) = target.log_density_and_gradient(&z);
        let mut hess = Matrix::zeros(d, d);
        let mut ok = log_density.is_finite();
        for j in 0..d {
            if !ok {
                break;
            }
            let h = 1e-5 * z[j].abs().max(1.0);
            let mut p = z.clone();
            p[j] += h;
            let (lu, gu) = target.log_density_and_gradient(&p);
            p[j] -= 2.0 * h;
            let (ld, gd) = target.log_density_and_gradient(&p);
            if !(lu.is_finite() && ld.is_finite()) {
                ok = false;
                break;
            }
            for i in 0..d {
                hess[(i, j)] = -(gu[i] - gd[i]) / (2.0 * h);
            }
        }
        let (eigenvalues, eigenvectors) = if ok {
            match hess.symmetrized().symmetric_eigen() {
                Ok((vals, vecs)) if vals.iter().all(|v| v.is_finite()) => {
                    (vals.into_iter().map(|v| v.abs().max(HESSIAN_FLOOR)).collect(), vecs)
                }
                _ => (vec![1.0; d], Matrix::identity(d)),
            }
        } else {
            (vec![1.0; d], Matrix::identity(d))
        };
        MmalaPoint {
            z,
            log_density,
            gradient,
            eigenvalues,
            eigenvectors,
        }
    }

    /// `z + (ε²/2) G⁻¹ ∇ log π`.
    pub fn proposal_mean(&self, step: f64) -> Vec<f64> {
        let v = &self.eigenvectors;
        let d = self.z.len();
        let mut out = self.z.clone();
        for k in 0..d {
            let proj: f64 = (0..d).map(|i| v[(i, k)] * self.gradient[i]).sum();
            let coef = 0.5 * step * step * proj / self.eigenvalues[k];
            for i in 0..d {
                out[i] += coef * v[(i, k)];
            }
        }
        out
    }

    /// `log N(x; mean(ε), ε² G⁻¹)`.
    pub fn proposal_logpdf(&self, x: &[f64], step: f64) -> f64 {
        let mean = self.proposal_mean(step);
        let v = &self.eigenvectors;
        let d = x.len();
        let mut acc = -0.5 * d as f64 * LN_2PI;
        for k in 0..d {
            let lam = self.eigenvalues[k];
            let proj: f64 = (0..d).map(|i| v[(i, k)] * (x[i] - mean[i])).sum();
            acc += 0.5 * libm::log(lam) - libm::log(step) - 0.5 * lam * proj * proj / (step * step);
        }
        acc
    }

    fn draw(&self, step: f64, rng: &mut RngStream) -> Vec<f64> {
        let mut out = self.proposal_mean(step);
        let d = out.len();
        let noise = rng.standard_normal_vec(d);
        for k in 0..d {
            let s = step * noise[k] / libm::sqrt(self.eigenvalues[k]);
            for (i, o) in out.iter_mut().enumerate() {
                *o += s * self.eigenvectors[(i, k)];
            }
        }
        out
    }
}

/// One mMALA transition with the full Metropolis–Hastings correction for
/// the position-dependent proposal.
pub fn mmala_step<T: TargetDensity + ?Sized>(
    target: &T,
    current: MmalaPoint,
    step: f64,
    rng: &mut RngStream,
) -> (MmalaPoint, bool, f64) {
    let proposal = current.draw(step, rng);
    let u = rng.uniform();
    let lp = target.log_density(&proposal);
    if !lp.is_finite() {
        return (current, false, 0.0);
    }
    let candidate = MmalaPoint::new(target, proposal);
    let log_ratio = candidate.log_density - current.log_density + candidate.proposal_logpdf(&current.z, step)
        - current.proposal_logpdf(&candidate.z, step);
    let accept_prob = if log_ratio.is_nan() { 0.0 } else { libm::exp(log_ratio).min(1.0) };
    if u < accept_prob {
        (candidate, true, accept_prob)
    } else {
        (current, false, accept_prob)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::tests::StdNormal;

    /// Piecewise-constant density with ratio 0.5 across zero.
    struct TwoLevel;

    impl TargetDensity for TwoLevel {
        fn dim(&self) -> usize {
            1
        }
        fn log_density(&self, z: &[f64]) -> f64 {
            if z[0] > 0.0 {
                libm::log(0.5)
            } else {
                0.0
            }
        }
        fn log_density_and_gradient(&self, z: &[f64]) -> (f64, Vec<f64>) {
            (self.log_density(z), vec![0.0])
        }
    }

    #[test]
    fn uphill_always_accepted() {
        let mut rng = RngStream::new(1, 0);
        let chol = Matrix::identity(1);
        for _ in 0..200 {
            let (z, _, a, p) = mh_step(&StdNormal(1), &[5.0], -12.5, 0.1, &chol, &mut rng);
            if z[0] < 5.0 {
                assert!(a && p == 1.0);
            }
        }
        let (z, _, acc, p) = mh_step(&TwoLevel, &[1.0], libm::log(0.5), 1e-9, &chol, &mut rng);
        assert!(acc && p == 1.0 && z[0] > 0.0);
    }

    #[test]
    fn acceptance_frequency_matches_ratio() {
        // Half of the proposals cross into the region with ratio 0.5, the rest
        // are always accepted, so the overall rate is 0.75.
        let mut rng = RngStream::new(2, 0);
        let chol = Matrix::identity(1);
        let trials = 100_000;
        let mut acc = 0usize;
        for _ in 0..trials {
            let (_, _, a, _) = mh_step(&TwoLevel, &[-1e-300], 0.0, 1.0, &chol, &mut rng);
            acc += a as usize;
        }
        let expected = 0.75 * trials as f64;
        let sd = libm::sqrt(trials as f64 * 0.75 * 0.25);
        assert!((acc as f64 - expected).abs() < 4.0 * sd, "{acc} vs {expected}");
    }

    #[test]
    fn neg_inf_proposals_are_rejected() {
        struct Wall;
        impl TargetDensity for Wall {
            fn dim(&self) -> usize {
                1
            }
            fn log_density(&self, z: &[f64]) -> f64 {
                if z[0] < 1.0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            fn log_density_and_gradient(&self, z: &[f64]) -> (f64, Vec<f64>) {
                (self.log_density(z), vec![0.0])
            }
        }
        let mut rng = RngStream::new(3, 0);
        let chol = Matrix::identity(1);
        for _ in 0..100 {
            let (z, _, a, _) = mh_step(&Wall, &[0.999], 0.0, 10.0, &chol, &mut rng);
            if !a {
                assert_eq!(z, [0.999]);
            } else {
                assert!(z[0] < 1.0);
            }
        }
    }

    #[test]
    fn mmala_mean_on_standard_gaussian() {
        let p = MmalaPoint::new(&StdNormal(2), vec![1.5, -0.4]);
        for l in &p.eigenvalues {
            assert!((l - 1.0).abs() < 1e-6);
        }
        let eps = 0.7;
        let m = p.proposal_mean(eps);
        assert!((m[0] - 1.5 * (1.0 - eps * eps / 2.0)).abs() < 1e-8);
        assert!((m[1] + 0.4 * (1.0 - eps * eps / 2.0)).abs() < 1e-8);
        let at_mode = MmalaPoint::new(&StdNormal(2), vec![0.0, 0.0]);
        assert_eq!(at_mode.proposal_mean(eps), [0.0, 0.0]);
    }

    #[test]
    fn mmala_metric_is_positive_definite() {
        // Negative curvature in the second coordinate, none in the third.
        struct Saddle;
        impl TargetDensity for Saddle {
            fn dim(&self) -> usize {
                3
            }
            fn log_density(&self, z: &[f64]) -> f64 {
                -0.5 * z[0] * z[0] + 2.0 * z[1] * z[1] + z[2]
            }
            fn log_density_and_gradient(&self, z: &[f64]) -> (f64, Vec<f64>) {
                (self.log_density(z), vec![-z[0], 4.0 * z[1], 1.0])
            }
        }
        let p = MmalaPoint::new(&Saddle, vec![0.1, 0.2, 0.3]);
        let mut vals = p.eigenvalues.clone();
        vals.sort_by(f64::total_cmp);
        assert_eq!(vals[0], HESSIAN_FLOOR);
        assert!((vals[1] - 1.0).abs() < 1e-6);
        assert!((vals[2] - 4.0).abs() < 1e-6);
    }
}
