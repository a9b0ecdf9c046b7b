use alloc::vec::Vec;

use crate::numerics::Matrix;

/// Nesterov dual averaging of `log ε` toward a target acceptance
/// probability, with the usual constants `γ = 0.05`, `t₀ = 10`, `κ = 0.75`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualAveraging {
    mu: f64,
    target: f64,
    h_bar: f64,
    log_step_bar: f64,
    t: f64,
}

impl DualAveraging {
    const GAMMA: f64 = 0.05;
    const T0: f64 = 10.0;
    const KAPPA: f64 = 0.75;

    pub fn new(initial_step: f64, target: f64) -> Self {
        DualAveraging {
            mu: libm::log(10.0 * initial_step),
            target,
            h_bar: 0.0,
            log_step_bar: libm::log(initial_step),
            t: 0.0,
        }
    }

    /// Feeds one acceptance statistic and returns the next step size.
    pub fn update(&mut self, accept_prob: f64) -> f64 {
        self.t += 1.0;
        let eta = 1.0 / (self.t + Self::T0);
        let a = if accept_prob.is_finite() { accept_prob.clamp(0.0, 1.0) } else { 0.0 };
        self.h_bar = (1.0 - eta) * self.h_bar + eta * (self.target - a);
        let log_step = self.mu - libm::sqrt(self.t) / Self::GAMMA * self.h_bar;
        let w = libm::pow(self.t, -Self::KAPPA);
        self.log_step_bar = w * log_step + (1.0 - w) * self.log_step_bar;
        libm::exp(log_step)
    }

    /// Averaged step size used after warm-up.
    pub fn final_step(&self) -> f64 {
        libm::exp(self.log_step_bar)
    }
}

fn column_moments(draws: &Matrix) -> (Vec<f64>, Vec<f64>) {
    let (n, d) = (draws.rows(), draws.cols());
    let mut mean = alloc::vec![0.0; d];
    for i in 0..n {
        for (m, v) in mean.iter_mut().zip(draws.row(i)) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut var = alloc::vec![0.0; d];
    for i in 0..n {
        for j in 0..d {
            let e = draws[(i, j)] - mean[j];
            var[j] += e * e;
        }
    }
    let denom = (n.max(2) - 1) as f64;
    for v in var.iter_mut() {
        *v /= denom;
    }
    (mean, var)
}

/// Diagonal mass `Mᵢᵢ = w / max(varᵢ, 1e-6) + (1 − w)` with `w = n/(n+5)`,
/// i.e. the inverse sample variance shrunk toward 1.
pub fn adapt_mass_matrix(draws: &Matrix) -> Vec<f64> {
    let n = draws.rows() as f64;
    let w = n / (n + 5.0);
    let (_, var) = column_moments(draws);
    var.into_iter().map(|v| w / v.max(1e-6) + (1.0 - w)).collect()
}

/// Sample covariance of pilot-run draws shrunk toward `1e-6·I` by the same
/// `n/(n+5)` weight, for use as an MH `proposal_cov`.
pub fn adapt_proposal_cov(draws: &Matrix) -> Matrix {
    let (n, d) = (draws.rows(), draws.cols());
    let (mean, _) = column_moments(draws);
    let mut cov = Matrix::zeros(d, d);
    for i in 0..n {
        let row = draws.row(i);
        for a in 0..d {
            let ea = row[a] - mean[a];
            for b in 0..=a {
                cov[(a, b)] += ea * (row[b] - mean[b]);
            }
        }
    }
    let w = n as f64 / (n as f64 + 5.0);
    let denom = (n.max(2) - 1) as f64;
    for a in 0..d {
        for b in 0..=a {
            let v = w * cov[(a, b)] / denom;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
        cov[(a, a)] += (1.0 - w) * 1e-6 + 1e-12;
    }
    cov
}
