//! MCMC kernels and the chain driver.
//!
//! All kernels work on unconstrained coordinates of a [`TargetDensity`].
//! Step sizes are tuned during warm-up by dual averaging; HMC additionally
//! adapts a diagonal mass matrix and random-walk MH a dense proposal
//! covariance. Adaptation is frozen at the end of warm-up.

mod adapt;
mod doughnut;
mod hmc;
mod mh;

use alloc::vec;
use alloc::vec::Vec;
use core::cell::Cell;

pub use adapt::{adapt_mass_matrix, adapt_proposal_cov, DualAveraging};
pub use doughnut::{doughnut_target, Doughnut};
pub use hmc::{hmc_step, leapfrog, HmcOutcome, Trajectory, DIVERGENCE_THRESHOLD};
pub use mh::{mh_step, mmala_step, MmalaPoint, HESSIAN_FLOOR};

use crate::numerics::{cholesky, Matrix, RngStream};

/// Unnormalized log-density over unconstrained coordinates.
///
/// `log_density` may return `-inf`; wherever it is finite the gradient
/// must be finite too.
pub trait TargetDensity {
    fn dim(&self) -> usize;
    fn log_density(&self, z: &[f64]) -> f64;
    fn log_density_and_gradient(&self, z: &[f64]) -> (f64, Vec<f64>);
}

impl<T: TargetDensity + ?Sized> TargetDensity for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn log_density(&self, z: &[f64]) -> f64 {
        (**self).log_density(z)
    }
    fn log_density_and_gradient(&self, z: &[f64]) -> (f64, Vec<f64>) {
        (**self).log_density_and_gradient(z)
    }
}

/// Wraps a target and counts evaluations (a gradient evaluation counts as one).
pub struct Counted<'a, T: ?Sized> {
    inner: &'a T,
    count: Cell<u64>,
}

impl<'a, T: TargetDensity + ?Sized> Counted<'a, T> {
    pub fn new(inner: &'a T) -> Self {
        Counted {
            inner,
            count: Cell::new(0),
        }
    }

    pub fn count(&self) -> u64 {
        self.count.get()
    }
}

impl<T: TargetDensity + ?Sized> TargetDensity for Counted<'_, T> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn log_density(&self, z: &[f64]) -> f64 {
        self.count.set(self.count.get() + 1);
        self.inner.log_density(z)
    }
    fn log_density_and_gradient(&self, z: &[f64]) -> (f64, Vec<f64>) {
        self.count.set(self.count.get() + 1);
        self.inner.log_density_and_gradient(z)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SamplerKind {
    /// Random-walk Metropolis with proposal `ζ + ε·chol(Σ)·z`; `Σ = I` when
    /// no covariance is given.
    Mh {
        step: f64,
        proposal_cov: Option<Matrix>,
    },
    Mmala {
        step: f64,
    },
    /// `trajectory_length` is the integration time before jitter; `mass` is
    /// the diagonal of `M` (identity when absent).
    Hmc {
        step: f64,
        trajectory_length: f64,
        jitter: f64,
        mass: Option<Vec<f64>>,
    },
}

impl SamplerKind {
    pub fn hmc_default() -> Self {
        SamplerKind::Hmc {
            step: 0.1,
            trajectory_length: 1.0,
            jitter: 0.2,
            mass: None,
        }
    }

    /// Acceptance rate aimed at when no target is configured.
    pub fn default_target_accept(&self) -> f64 {
        match self {
            SamplerKind::Mh { .. } => 0.234,
            SamplerKind::Mmala { .. } => 0.574,
            SamplerKind::Hmc { .. } => 0.8,
        }
    }

    fn step(&self) -> f64 {
        match self {
            SamplerKind::Mh { step, .. } | SamplerKind::Mmala { step } | SamplerKind::Hmc { step, .. } => *step,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    /// Total iterations including warm-up.
    pub iterations: usize,
    pub warmup: usize,
    /// Defaults to [`SamplerKind::default_target_accept`].
    pub target_accept: Option<f64>,
    pub adapt_step: bool,
    /// Diagonal HMC mass from warm-up draws. MH keeps its proposal
    /// covariance (identity unless given) and adapts only the step.
    pub adapt_metric: bool,
    /// Keep every `thin`-th post-warm-up draw.
    pub thin: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            kind: SamplerKind::hmc_default(),
            iterations: 6000,
            warmup: 1000,
            target_accept: None,
            adapt_step: true,
            adapt_metric: true,
            thin: 1,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<(), SamplerError> {
        let bad = |m: &'static str| Err(SamplerError::InvalidConfig(m));
        if !(self.kind.step() > 0.0) {
            return bad("step size must be positive");
        }
        if self.iterations <= self.warmup {
            return bad("iterations must exceed warmup");
        }
        if self.thin == 0 {
            return bad("thin must be at least 1");
        }
        if let Some(a) = self.target_accept {
            if !(a > 0.0 && a < 1.0) {
                return bad("target_accept must lie in (0, 1)");
            }
        }
        if let SamplerKind::Hmc {
            trajectory_length,
            jitter,
            mass,
            ..
        } = &self.kind
        {
            if !(*trajectory_length > 0.0) {
                return bad("trajectory length must be positive");
            }
            if !(0.0..1.0).contains(jitter) {
                return bad("jitter must lie in [0, 1)");
            }
            if let Some(m) = mass {
                if m.iter().any(|v| !(*v > 0.0)) {
                    return bad("mass entries must be positive");
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SamplerError {
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("no finite starting point found after {0} attempts")]
    InitializationFailed(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Post-warm-up output of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    /// Kept draws, one row per iteration.
    pub draws: Matrix,
    pub log_density: Vec<f64>,
    pub accepted: Vec<bool>,
    pub acceptance_rate: f64,
    /// Divergent post-warm-up transitions, thinned-out ones included.
    pub divergences: usize,
    /// Target evaluations over the whole run, warm-up included.
    pub evaluations: u64,
    pub step_size: f64,
    /// Final diagonal mass (HMC only).
    pub mass: Option<Vec<f64>>,
    pub seed: u64,
    pub stream: u64,
    pub config: SamplerConfig,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.draws.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.rows() == 0
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.draws.column(j)
    }
}

const INIT_ATTEMPTS: usize = 100;

/// Finds a finite starting point: `init` if given and finite, otherwise
/// draws from `N(0, 0.1·I)`.
fn initialize<T: TargetDensity + ?Sized>(
    target: &T,
    init: Option<&[f64]>,
    rng: &mut RngStream,
) -> Result<Vec<f64>, SamplerError> {
    let d = target.dim();
    if let Some(x) = init {
        if x.len() != d {
            return Err(SamplerError::DimensionMismatch {
                expected: d,
                found: x.len(),
            });
        }
        if target.log_density(x).is_finite() {
            return Ok(x.to_vec());
        }
    }
    let sd = libm::sqrt(0.1);
    for _ in 0..INIT_ATTEMPTS {
        let z: Vec<f64> = rng.standard_normal_vec(d).iter().map(|v| v * sd).collect();
        if target.log_density(&z).is_finite() {
            return Ok(z);
        }
    }
    Err(SamplerError::InitializationFailed(INIT_ATTEMPTS))
}

/// Warm-up windows `[start, end)` whose draws feed metric estimates.
fn metric_windows(warmup: usize) -> Vec<(usize, usize)> {
    if warmup < 40 {
        return Vec::new();
    }
    let a = warmup * 15 / 100;
    let b = warmup * 40 / 100;
    let c = warmup * 80 / 100;
    vec![(a, b), (b, c)]
}

/// Runs one chain. Deterministic in `(rng seed, rng stream, cfg, init)`.
pub fn run_chain<T: TargetDensity + ?Sized>(
    target: &T,
    cfg: &SamplerConfig,
    rng: &mut RngStream,
    init: Option<&[f64]>,
) -> Result<Chain, SamplerError> {
    cfg.validate()?;
    let counted = Counted::new(target);
    let d = counted.dim();
    let mut z = initialize(&counted, init, rng)?;
    let target_accept = cfg.target_accept.unwrap_or_else(|| cfg.kind.default_target_accept());

    let mut step = cfg.kind.step();
    let mut mass = match &cfg.kind {
        SamplerKind::Hmc { mass: Some(m), .. } => {
            if m.len() != d {
                return Err(SamplerError::DimensionMismatch {
                    expected: d,
                    found: m.len(),
                });
            }
            m.clone()
        }
        _ => vec![1.0; d],
    };
    let proposal_chol = match &cfg.kind {
        SamplerKind::Mh {
            proposal_cov: Some(c), ..
        } => cholesky(c).map_err(|_| SamplerError::InvalidConfig("proposal covariance is not positive definite"))?,
        _ => Matrix::identity(d),
    };
    let mut averager = DualAveraging::new(step, target_accept);
    let windows = metric_windows(cfg.warmup);
    let mut window_draws: Vec<f64> = Vec::new();

    let (mut logp, mut grad) = counted.log_density_and_gradient(&z);
    let mut mmala_point = match cfg.kind {
        SamplerKind::Mmala { .. } => Some(MmalaPoint::new(&counted, z.clone())),
        _ => None,
    };

    let kept = (cfg.iterations - cfg.warmup).div_ceil(cfg.thin);
    let mut draws = Vec::with_capacity(kept * d);
    let mut trace = Vec::with_capacity(kept);
    let mut flags = Vec::with_capacity(kept);
    let mut divergences = 0;

    for it in 0..cfg.iterations {
        let (accepted, accept_prob) = match &cfg.kind {
            SamplerKind::Mh { .. } => {
                let (next, lp, acc, prob) = mh_step(&counted, &z, logp, step, &proposal_chol, rng);
                z = next;
                logp = lp;
                (acc, prob)
            }
            SamplerKind::Mmala { .. } => {
                let current = mmala_point.take().expect("mmala state");
                let (next, acc, prob) = mmala_step(&counted, current, step, rng);
                z.clone_from(&next.z);
                logp = next.log_density;
                mmala_point = Some(next);
                (acc, prob)
            }
            SamplerKind::Hmc {
                trajectory_length,
                jitter,
                ..
            } => {
                let out = hmc_step(
                    &counted,
                    Trajectory {
                        z: &z,
                        log_density: logp,
                        gradient: &grad,
                    },
                    step,
                    *trajectory_length,
                    *jitter,
                    &mass,
                    rng,
                );
                if out.diverged && it >= cfg.warmup {
                    divergences += 1;
                }
                z = out.z;
                logp = out.log_density;
                grad = out.gradient;
                (out.accepted, out.accept_prob)
            }
        };

        if it < cfg.warmup {
            if cfg.adapt_step {
                step = averager.update(accept_prob);
            }
            if cfg.adapt_metric {
                if let Some(&(start, end)) = windows.iter().find(|(s, e)| (*s..*e).contains(&it)) {
                    window_draws.extend_from_slice(&z);
                    if it + 1 == end {
                        let n = end - start;
                        let m = Matrix::from_row_major(n, d, core::mem::take(&mut window_draws))
                            .expect("non-empty window");
                        if let SamplerKind::Hmc { .. } = cfg.kind {
                            mass = adapt_mass_matrix(&m);
                        }
                        if cfg.adapt_step {
                            averager = DualAveraging::new(step, target_accept);
                        }
                    }
                }
            }
            if it + 1 == cfg.warmup && cfg.adapt_step {
                step = averager.final_step();
            }
        } else if (it - cfg.warmup) % cfg.thin == 0 {
            draws.extend_from_slice(&z);
            trace.push(logp);
            flags.push(accepted);
        }
    }

    let n_kept = flags.len();
    let acceptance_rate = flags.iter().filter(|a| **a).count() as f64 / n_kept as f64;
    Ok(Chain {
        draws: Matrix::from_row_major(n_kept, d, draws).expect("at least one kept draw"),
        log_density: trace,
        accepted: flags,
        acceptance_rate,
        divergences,
        evaluations: counted.count(),
        step_size: step,
        mass: match cfg.kind {
            SamplerKind::Hmc { .. } => Some(mass),
            _ => None,
        },
        seed: rng.seed(),
        stream: rng.stream(),
        config: cfg.clone(),
    })
}
