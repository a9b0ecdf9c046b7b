use alloc::vec;
use alloc::vec::Vec;

use super::TargetDensity;

/// Spherical shell `log π(η) = −(‖η‖ − r₀)² / (2σ_r²)`, a stress test for
/// random-walk proposals. Undefined at the origin, where it returns `-inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Doughnut {
    pub dim: usize,
    pub r0: f64,
    pub sigma_r: f64,
}

/// 2-D doughnut with the given radius and shell width.
pub fn doughnut_target(r0: f64, sigma_r: f64) -> Doughnut {
    Doughnut { dim: 2, r0, sigma_r }
}

impl Default for Doughnut {
    fn default() -> Self {
        doughnut_target(3.0, 0.5)
    }
}

impl Doughnut {
    fn radius(z: &[f64]) -> f64 {
        libm::sqrt(z.iter().map(|v| v * v).sum::<f64>())
    }
}

impl TargetDensity for Doughnut {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, z: &[f64]) -> f64 {
        let r = Self::radius(z);
        if r == 0.0 || !r.is_finite() {
            return f64::NEG_INFINITY;
        }
        let e = r - self.r0;
        -e * e / (2.0 * self.sigma_r * self.sigma_r)
    }

    fn log_density_and_gradient(&self, z: &[f64]) -> (f64, Vec<f64>) {
        let r = Self::radius(z);
        if r == 0.0 || !r.is_finite() {
            return (f64::NEG_INFINITY, vec![0.0; z.len()]);
        }
        let s2 = self.sigma_r * self.sigma_r;
        let e = r - self.r0;
        let k = -e / (s2 * r);
        (-e * e / (2.0 * s2), z.iter().map(|v| k * v).collect())
    }
}
