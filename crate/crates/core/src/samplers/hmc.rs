use alloc::vec::Vec;

use super::TargetDensity;
use crate::numerics::RngStream;

/// Trajectories whose energy error exceeds this are rejected and counted
/// as divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1000.0;

/// Upper bound on leapfrog steps per trajectory, so that a collapsing step
/// size during warm-up cannot stall a chain.
const MAX_STEPS: usize = 1024;

/// Current position with its cached log-density and gradient.
#[derive(Debug, Clone, Copy)]
pub struct Trajectory<'a> {
    pub z: &'a [f64],
    pub log_density: f64,
    pub gradient: &'a [f64],
}

/// End point of a leapfrog integration.
#[derive(Debug, Clone, PartialEq)]
pub struct LeapfrogEnd {
    pub z: Vec<f64>,
    pub rho: Vec<f64>,
    pub log_density: f64,
    pub gradient: Vec<f64>,
    /// The density became non-finite along the way.
    pub aborted: bool,
}

/// `n_steps` leapfrog steps for `H = −log π(ζ) + ½ ρᵀ M⁻¹ ρ` with diagonal
/// `M`. `start.gradient` is `∇ log π` at `start.z`.
pub fn leapfrog<T: TargetDensity + ?Sized>(
    target: &T,
    start: Trajectory<'_>,
    rho: &[f64],
    step: f64,
    n_steps: usize,
    mass: &[f64],
) -> LeapfrogEnd {
    let mut z = start.z.to_vec();
    let mut rho = rho.to_vec();
    let mut grad = start.gradient.to_vec();
    let mut logp = start.log_density;
    let half = 0.5 * step;
    for _ in 0..n_steps {
        for (r, g) in rho.iter_mut().zip(&grad) {
            *r += half * g;
        }
        for ((zi, r), m) in z.iter_mut().zip(&rho).zip(mass) {
            *zi += step * r / m;
        }
        let (lp, g) = target.log_density_and_gradient(&z);
        logp = lp;
        grad = g;
        if !logp.is_finite() {
            return LeapfrogEnd {
                z,
                rho,
                log_density: logp,
                gradient: grad,
                aborted: true,
            };
        }
        for (r, g) in rho.iter_mut().zip(&grad) {
            *r += half * g;
        }
    }
    LeapfrogEnd {
        z,
        rho,
        log_density: logp,
        gradient: grad,
        aborted: false,
    }
}

fn kinetic(rho: &[f64], mass: &[f64]) -> f64 {
    0.5 * rho.iter().zip(mass).map(|(r, m)| r * r / m).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HmcOutcome {
    pub z: Vec<f64>,
    pub log_density: f64,
    pub gradient: Vec<f64>,
    pub accepted: bool,
    pub accept_prob: f64,
    pub diverged: bool,
}

/// One HMC transition with momentum `ρ ~ N(0, M)` and a uniformly jittered
/// integration time `L·(1 + jitter·(2u − 1))`.
pub fn hmc_step<T: TargetDensity + ?Sized>(
    target: &T,
    current: Trajectory<'_>,
    step: f64,
    trajectory_length: f64,
    jitter: f64,
    mass: &[f64],
    rng: &mut RngStream,
) -> HmcOutcome {
    let rho: Vec<f64> = mass.iter().map(|m| libm::sqrt(*m) * rng.standard_normal()).collect();
    let length = trajectory_length * (1.0 + jitter * (2.0 * rng.uniform() - 1.0));
    let n_steps = (libm::floor(length / step) as usize).clamp(1, MAX_STEPS);
    let u = rng.uniform();

    let h0 = -current.log_density + kinetic(&rho, mass);
    let end = leapfrog(target, current, &rho, step, n_steps, mass);
    let rho_end: Vec<f64> = end.rho.iter().map(|r| -r).collect();
    let h1 = -end.log_density + kinetic(&rho_end, mass);
    let delta = h1 - h0;

    let reject = |diverged| HmcOutcome {
        z: current.z.to_vec(),
        log_density: current.log_density,
        gradient: current.gradient.to_vec(),
        accepted: false,
        accept_prob: 0.0,
        diverged,
    };
    if end.aborted || !delta.is_finite() || delta.abs() > DIVERGENCE_THRESHOLD {
        return reject(true);
    }
    let accept_prob = libm::exp(-delta).min(1.0);
    if u < accept_prob {
        HmcOutcome {
            z: end.z,
            log_density: end.log_density,
            gradient: end.gradient,
            accepted: true,
            accept_prob,
            diverged: false,
        }
    } else {
        HmcOutcome {
            accept_prob,
            ..reject(false)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    struct Quadratic;

    impl TargetDensity for Quadratic {
        fn dim(&self) -> usize {
            1
        }
        fn log_density(&self, z: &[f64]) -> f64 {
            -0.5 * z[0] * z[0]
        }
        fn log_density_and_gradient(&self, z: &[f64]) -> (f64, Vec<f64>) {
            (self.log_density(z), vec![-z[0]])
        }
    }

    /// Banana-shaped 2-D target with a non-constant Hessian.
    struct Banana;

    impl TargetDensity for Banana {
        fn dim(&self) -> usize {
            2
        }
        fn log_density(&self, z: &[f64]) -> f64 {
            let w = z[1] - 0.5 * z[0] * z[0];
            -0.5 * z[0] * z[0] - 2.0 * w * w
        }
        fn log_density_and_gradient(&self, z: &[f64]) -> (f64, Vec<f64>) {
            let w = z[1] - 0.5 * z[0] * z[0];
            (self.log_density(z), vec![-z[0] + 4.0 * w * z[0], -4.0 * w])
        }
    }

    struct Flat;

    impl TargetDensity for Flat {
        fn dim(&self) -> usize {
            2
        }
        fn log_density(&self, _z: &[f64]) -> f64 {
            0.0
        }
        fn log_density_and_gradient(&self, _z: &[f64]) -> (f64, Vec<f64>) {
            (0.0, vec![0.0, 0.0])
        }
    }

    fn start<'a, T: TargetDensity>(t: &T, z: &'a [f64], g: &'a mut Vec<f64>) -> Trajectory<'a> {
        let (lp, grad) = t.log_density_and_gradient(z);
        *g = grad;
        Trajectory {
            z,
            log_density: lp,
            gradient: g,
        }
    }

    #[test]
    fn one_step_by_hand() {
        let mut g = Vec::new();
        let end = leapfrog(&Quadratic, start(&Quadratic, &[1.0], &mut g), &[0.0], 0.1, 1, &[1.0]);
        assert!((end.z[0] - 0.995).abs() < 1e-15);
        assert!((end.rho[0] + 0.09975).abs() < 1e-15);
    }

    #[test]
    fn flat_target_with_zero_momentum_stays_put() {
        let mut g = Vec::new();
        let end = leapfrog(&Flat, start(&Flat, &[0.3, -1.0], &mut g), &[0.0, 0.0], 0.2, 7, &[1.0, 1.0]);
        assert_eq!(end.z, [0.3, -1.0]);
        let mut g = Vec::new();
        let mut rng = RngStream::new(1, 0);
        let out = hmc_step(&Flat, start(&Flat, &[0.3, -1.0], &mut g), 0.2, 1.0, 0.2, &[1.0, 1.0], &mut rng);
        assert!(out.accepted);
        assert_eq!(out.accept_prob, 1.0);
    }

    #[test]
    fn reversibility() {
        let z0 = [0.7, -0.3];
        let rho0 = [0.4, 1.1];
        let mass = [1.0, 2.5];
        let mut g = Vec::new();
        let fwd = leapfrog(&Banana, start(&Banana, &z0, &mut g), &rho0, 0.05, 40, &mass);
        let flipped: Vec<f64> = fwd.rho.iter().map(|r| -r).collect();
        let mut g2 = Vec::new();
        let back = leapfrog(&Banana, start(&Banana, &fwd.z, &mut g2), &flipped, 0.05, 40, &mass);
        for i in 0..2 {
            assert!((back.z[i] - z0[i]).abs() < 1e-10);
            assert!((-back.rho[i] - rho0[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn one_step_map_preserves_volume() {
        let map = |s: &[f64; 4]| -> [f64; 4] {
            let mut g = Vec::new();
            let end = leapfrog(&Banana, start(&Banana, &s[..2], &mut g), &s[2..], 0.1, 1, &[1.0, 1.0]);
            [end.z[0], end.z[1], end.rho[0], end.rho[1]]
        };
        let s0 = [0.4, 0.9, -0.6, 0.3];
        let h = 1e-6;
        let mut jac = [[0.0; 4]; 4];
        for j in 0..4 {
            let mut p = s0;
            p[j] += h;
            let up = map(&p);
            p[j] -= 2.0 * h;
            let dn = map(&p);
            for i in 0..4 {
                jac[i][j] = (up[i] - dn[i]) / (2.0 * h);
            }
        }
        // Determinant by Gaussian elimination with partial pivoting.
        let mut a = jac;
        let mut d = 1.0;
        for c in 0..4 {
            let p = (c..4).max_by(|x, y| a[*x][c].abs().total_cmp(&a[*y][c].abs())).unwrap();
            if p != c {
                a.swap(p, c);
                d = -d;
            }
            d *= a[c][c];
            for r in c + 1..4 {
                let f = a[r][c] / a[c][c];
                for k in c..4 {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
        assert!((d - 1.0).abs() < 1e-6, "{d}");
    }

    fn max_energy_error(step: f64) -> f64 {
        let n = libm::round(3.0 / step) as usize;
        let mut z = vec![1.0];
        let mut rho = vec![0.5];
        let h0 = 0.5 + 0.125;
        let mut worst: f64 = 0.0;
        for _ in 0..n {
            let mut g = Vec::new();
            let end = leapfrog(&Quadratic, start(&Quadratic, &z, &mut g), &rho, step, 1, &[1.0]);
            z = end.z;
            rho = end.rho;
            let h = 0.5 * z[0] * z[0] + 0.5 * rho[0] * rho[0];
            worst = worst.max((h - h0).abs());
        }
        worst
    }

    #[test]
    fn energy_error_is_second_order() {
        let ratio = max_energy_error(0.1) / max_energy_error(0.05);
        assert!((3.5..=4.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn tiny_steps_accept_nearly_always() {
        let mut rng = RngStream::new(2, 0);
        let mut z = vec![0.5];
        let (mut lp, mut g) = Quadratic.log_density_and_gradient(&z);
        let mut acc = 0;
        for _ in 0..1000 {
            let out = hmc_step(
                &Quadratic,
                Trajectory {
                    z: &z,
                    log_density: lp,
                    gradient: &g,
                },
                0.01,
                1.0,
                0.2,
                &[1.0],
                &mut rng,
            );
            acc += out.accepted as usize;
            z = out.z;
            lp = out.log_density;
            g = out.gradient;
        }
        assert!(acc > 990);
    }

    #[test]
    fn divergence_is_rejected() {
        struct Cliff;
        impl TargetDensity for Cliff {
            fn dim(&self) -> usize {
                1
            }
            fn log_density(&self, z: &[f64]) -> f64 {
                -1e6 * z[0] * z[0]
            }
            fn log_density_and_gradient(&self, z: &[f64]) -> (f64, Vec<f64>) {
                (self.log_density(z), vec![-2e6 * z[0]])
            }
        }
        let mut g = Vec::new();
        let mut rng = RngStream::new(3, 0);
        let out = hmc_step(&Cliff, start(&Cliff, &[0.01], &mut g), 0.5, 5.0, 0.0, &[1.0], &mut rng);
        assert!(out.diverged && !out.accepted);
        assert_eq!(out.z, [0.01]);
    }
}
