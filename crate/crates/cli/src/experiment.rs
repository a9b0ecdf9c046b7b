//! Data loading, target assembly, concurrent chains and post-processing.

use std::path::Path;
use std::time::Instant;

use hmc_sysid_core::diagnostics::{model_fit, summarize_columns, DiagnosticsError, Summary};
use hmc_sysid_core::models::{
    arx_predict, oe_predict, simulate, simulate_nlss, DataSet, ModelError, NlssModel, StateSpaceDynamics,
};
use hmc_sysid_core::numerics::{Matrix, RngStream};
use hmc_sysid_core::posterior::{NlssPosterior, ParameterSpace, PosteriorError, TransferModel, TransferPosterior};
use hmc_sysid_core::samplers::{run_chain, Chain, SamplerConfig, SamplerError, SamplerKind, TargetDensity};

use crate::config::{ConfigError, DataConfig, ExperimentConfig, ResolvedModel};
use crate::data::{ingest_csv, IngestError};

/// Stream id of the data simulator when the data seed is inherited from the
/// experiment seed, keeping it apart from the chain streams `0..chains`.
pub const DATA_STREAM: u64 = u64::MAX;

/// Upper bound on the draws averaged for predictions.
pub const MAX_PREDICTION_DRAWS: usize = 500;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Posterior(#[from] PosteriorError),
    #[error("chain {chain}: {source}")]
    Sampler { chain: usize, source: SamplerError },
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error("chain {0} panicked")]
    ChainPanicked(usize),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
    #[error("{0}")]
    Artifact(String),
}

impl RunError {
    /// 2 for invalid configuration or input files, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Ingest(_) => 2,
            _ => 3,
        }
    }

    pub fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> RunError {
        let context = context.into();
        move |source| RunError::Io { context, source }
    }
}

/// Assembled log-posterior.
#[derive(Debug, Clone)]
pub enum Target {
    Transfer(TransferPosterior),
    Pendulum(NlssPosterior<NlssModel>),
}

impl Target {
    pub fn space(&self) -> &ParameterSpace {
        match self {
            Target::Transfer(p) => p.space(),
            Target::Pendulum(p) => p.space(),
        }
    }
}

impl TargetDensity for Target {
    fn dim(&self) -> usize {
        match self {
            Target::Transfer(p) => p.dim(),
            Target::Pendulum(p) => p.dim(),
        }
    }

    fn log_density(&self, z: &[f64]) -> f64 {
        match self {
            Target::Transfer(p) => p.log_density(z),
            Target::Pendulum(p) => p.log_density(z),
        }
    }

    fn log_density_and_gradient(&self, z: &[f64]) -> (f64, Vec<f64>) {
        match self {
            Target::Transfer(p) => p.log_density_and_gradient(z),
            Target::Pendulum(p) => p.log_density_and_gradient(z),
        }
    }
}

/// Simulated data plus the state trajectory that produced it (pendulum).
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedData {
    pub data: DataSet,
    pub true_states: Option<Matrix>,
    pub data_seed: Option<u64>,
}

fn expected_outputs(cfg: &ExperimentConfig) -> usize {
    match cfg.resolve_model() {
        ResolvedModel::Transfer { .. } => 1,
        ResolvedModel::Pendulum { spec, .. } => spec.dynamics.output_dim(),
    }
}

/// Simulates or reads the data set named by `cfg`.
pub fn load_data(cfg: &ExperimentConfig) -> Result<LoadedData, RunError> {
    let loaded = match &cfg.data {
        DataConfig::File(path) => {
            let data = ingest_csv(Path::new(path)).map_err(|e| match e {
                IngestError::Empty => RunError::Config(ConfigError::ConstraintViolation {
                    path: "data.file".into(),
                    message: "data set has no samples".into(),
                }),
                other => other.into(),
            })?;
            LoadedData {
                data,
                true_states: None,
                data_seed: None,
            }
        }
        DataConfig::Simulate(sim) => {
            let (seed, stream) = match sim.seed {
                Some(s) => (s, 0),
                None => (cfg.seed, DATA_STREAM),
            };
            let mut rng = RngStream::new(seed, stream);
            let input = sim.input.to_signal();
            match (sim.sim_model(), cfg.resolve_model()) {
                (Some(model), _) => LoadedData {
                    data: simulate(&model, &input, sim.length, sim.dt, &mut rng)?,
                    true_states: None,
                    data_seed: Some(seed),
                },
                (None, ResolvedModel::Pendulum { spec, .. }) => {
                    let theta = sim.system.parameters.as_ref().expect("validated");
                    let x0 = sim.system.x0.as_ref().expect("validated");
                    let (data, states) = simulate_nlss(&spec, theta, x0, &input, sim.length, sim.dt, &mut rng)?;
                    LoadedData {
                        data,
                        true_states: Some(states),
                        data_seed: Some(seed),
                    }
                }
                (None, ResolvedModel::Transfer { .. }) => unreachable!("validated"),
            }
        }
    };
    let want = expected_outputs(cfg);
    if loaded.data.n_outputs() != want {
        return Err(ConfigError::ConstraintViolation {
            path: "data".into(),
            message: format!("model expects {want} output(s), data has {}", loaded.data.n_outputs()),
        }
        .into());
    }
    Ok(loaded)
}

/// Builds the log-posterior of `cfg`'s model on `data`.
pub fn assemble_target(cfg: &ExperimentConfig, data: &DataSet) -> Result<Target, RunError> {
    Ok(match cfg.resolve_model() {
        ResolvedModel::Transfer { model, options } => {
            Target::Transfer(TransferPosterior::new(model, data.clone(), options)?)
        }
        ResolvedModel::Pendulum { spec, prior, .. } => Target::Pendulum(NlssPosterior::new(spec, data.clone(), prior)?),
    })
}

/// Starting point for a pendulum chain: parameters at their configured
/// values, angles at the measurements, rates by central differences of the
/// measured angles, scale hyperparameters at zero.
pub fn measurement_init(target: &NlssPosterior<NlssModel>, initial_parameters: &[f64]) -> Vec<f64> {
    let data = target.data();
    let n = data.len();
    let mut z = vec![0.0; target.dim()];
    for (i, v) in target.param_range().zip(initial_parameters) {
        z[i] = v.ln();
    }
    let states = target.state_range();
    for t in 0..n {
        let (lo, hi) = (t.saturating_sub(1), (t + 1).min(n - 1));
        let span = (hi - lo).max(1) as f64 * data.dt();
        let row = states.start + 4 * t;
        for j in 0..2 {
            z[row + j] = data.y_at(t)[j];
            z[row + 2 + j] = (data.y_at(hi)[j] - data.y_at(lo)[j]) / span;
        }
    }
    z
}

/// Lower bound on [`curvature_mass`] entries.
pub const MASS_FLOOR: f64 = 1e-3;

/// Diagonal HMC mass from the curvature `|∂²log π/∂z_i²|` at `z`, by central
/// differences of the gradient. Used as the starting metric when the
/// chain starts from a data-based point, where coordinate scales differ by
/// orders of magnitude.
pub fn curvature_mass<T: TargetDensity>(target: &T, z: &[f64]) -> Vec<f64> {
    let mut probe = z.to_vec();
    (0..z.len())
        .map(|i| {
            let h = 1e-5 * z[i].abs().max(1.0);
            probe[i] = z[i] + h;
            let up = target.log_density_and_gradient(&probe).1[i];
            probe[i] = z[i] - h;
            let down = target.log_density_and_gradient(&probe).1[i];
            probe[i] = z[i];
            let c = ((up - down) / (2.0 * h)).abs();
            if c.is_finite() {
                c.max(MASS_FLOOR)
            } else {
                1.0
            }
        })
        .collect()
}

/// Model fit of the posterior-mean prediction.
#[derive(Debug, Clone, PartialEq)]
pub enum FitReport {
    Transfer {
        estimation_samples: usize,
        validation_samples: usize,
        estimation_fit: f64,
        validation_fit: Option<f64>,
        draws_used: usize,
    },
    Pendulum {
        /// One fit per measured channel.
        output_fit: Vec<f64>,
        draws_used: usize,
        /// Posterior mean and sd of every state (`N × n_x` each).
        state_mean: Matrix,
        state_sd: Matrix,
    },
}

/// Everything a finished run produces, before anything is written.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub config: ExperimentConfig,
    pub data: LoadedData,
    pub estimation_samples: usize,
    pub target: Target,
    pub chains: Vec<Chain>,
    pub summary: Summary,
    pub fit: FitReport,
    pub wall_clock_seconds: f64,
}

impl RunOutcome {
    /// Kept draws of all chains stacked in chain order.
    pub fn pooled_draws(&self) -> Matrix {
        pool(&self.chains)
    }
}

fn pool(chains: &[Chain]) -> Matrix {
    let d = chains[0].draws.cols();
    let rows: usize = chains.iter().map(|c| c.len()).sum();
    let mut data = Vec::with_capacity(rows * d);
    for c in chains {
        data.extend_from_slice(c.draws.as_slice());
    }
    Matrix::from_row_major(rows, d, data).expect("equal widths")
}

/// Evenly spaced subset of at most `max` row indices.
pub fn spread_rows(rows: usize, max: usize) -> Vec<usize> {
    if rows <= max {
        return (0..rows).collect();
    }
    (0..max).map(|i| i * rows / max).collect()
}

fn pooled_summary(space: &ParameterSpace, chains: &[Chain], skip: Option<std::ops::Range<usize>>) -> Result<Summary, RunError> {
    let draws = pool(chains);
    let d = space.dim();
    let mut data = Vec::with_capacity(draws.rows() * d);
    for i in 0..draws.rows() {
        data.extend(space.constrain(draws.row(i)));
    }
    let constrained = Matrix::from_row_major(draws.rows(), d, data).expect("row-major layout");
    let hyper = space.hyper_mask();
    let columns: Vec<usize> = (0..d)
        .filter(|j| !hyper[*j] && !skip.as_ref().is_some_and(|r| r.contains(j)))
        .collect();
    let n_it: usize = chains.iter().map(|c| c.len()).sum();
    let accepted: usize = chains.iter().map(|c| c.accepted.iter().filter(|a| **a).count()).sum();
    let divergences = chains.iter().map(|c| c.divergences).sum();
    Ok(summarize_columns(
        &constrained,
        &space.constrained_names(),
        &columns,
        accepted as f64 / n_it as f64,
        divergences,
    )?)
}

fn transfer_fit(
    post: &TransferPosterior,
    full: &DataSet,
    n_est: usize,
    draws: &Matrix,
) -> Result<FitReport, RunError> {
    let rows = spread_rows(draws.rows(), MAX_PREDICTION_DRAWS);
    let n = full.len();
    let (offset, len) = match post.model() {
        TransferModel::Arx(s) => (s.first_index(), n - s.first_index()),
        TransferModel::Oe(_) => (0, n),
    };
    let mut mean = vec![0.0; len];
    for &i in &rows {
        let coeffs = post.coefficients(draws.row(i));
        let pred = match post.model() {
            TransferModel::Arx(s) => arx_predict(s, coeffs, full)?,
            TransferModel::Oe(s) => oe_predict(s, coeffs, full)?,
        };
        for (m, p) in mean.iter_mut().zip(&pred) {
            *m += p / rows.len() as f64;
        }
    }
    let y = full.y_scalar();
    let fit_over = |from: usize, to: usize| -> Result<f64, RunError> {
        Ok(model_fit(&mean[from - offset..to - offset], &y[from..to])?)
    };
    let estimation_fit = fit_over(offset.min(n_est), n_est)?;
    let validation_fit = if n_est < n { Some(fit_over(n_est.max(offset), n)?) } else { None };
    Ok(FitReport::Transfer {
        estimation_samples: n_est,
        validation_samples: n - n_est,
        estimation_fit,
        validation_fit,
        draws_used: rows.len(),
    })
}

fn pendulum_fit(post: &NlssPosterior<NlssModel>, draws: &Matrix) -> Result<FitReport, RunError> {
    let data = post.data();
    let dynamics = post.spec().dynamics;
    let (n, n_x, n_y) = (data.len(), dynamics.state_dim(), dynamics.output_dim());
    let states = post.state_range();
    let params = post.param_range();

    let mut sum = vec![0.0; n * n_x];
    let mut sum_sq = vec![0.0; n * n_x];
    for i in 0..draws.rows() {
        for (k, v) in draws.row(i)[states.clone()].iter().enumerate() {
            sum[k] += v;
            sum_sq[k] += v * v;
        }
    }
    let m = draws.rows() as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / m).collect();
    let sd: Vec<f64> = sum_sq
        .iter()
        .zip(&mean)
        .map(|(s, mu)| ((s / m - mu * mu) * m / (m - 1.0).max(1.0)).max(0.0).sqrt())
        .collect();

    let rows = spread_rows(draws.rows(), MAX_PREDICTION_DRAWS);
    let mut pred = vec![0.0; n * n_y];
    for &i in &rows {
        let z = draws.row(i);
        let theta: Vec<f64> = z[params.clone()].iter().map(|v| v.exp()).collect();
        for t in 0..n {
            let x = &z[states.start + t * n_x..states.start + (t + 1) * n_x];
            let h = dynamics.measure(x, data.u()[t], &theta)?;
            for (j, v) in h.iter().enumerate() {
                pred[t * n_y + j] += v / rows.len() as f64;
            }
        }
    }
    let mut output_fit = Vec::with_capacity(n_y);
    for j in 0..n_y {
        let p: Vec<f64> = (0..n).map(|t| pred[t * n_y + j]).collect();
        output_fit.push(model_fit(&p, &data.y().column(j))?);
    }
    Ok(FitReport::Pendulum {
        output_fit,
        draws_used: rows.len(),
        state_mean: Matrix::from_row_major(n, n_x, mean).expect("shape"),
        state_sd: Matrix::from_row_major(n, n_x, sd).expect("shape"),
    })
}

/// Runs `chains` chains concurrently, stream `k` for chain `k`.
pub fn run_chains(
    target: &Target,
    sampler: &SamplerConfig,
    seed: u64,
    chains: usize,
    init: Option<&[f64]>,
) -> Result<Vec<Chain>, RunError> {
    let results: Vec<Result<Result<Chain, SamplerError>, ()>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..chains)
            .map(|k| s.spawn(move || run_chain(target, sampler, &mut RngStream::new(seed, k as u64), init)))
            .collect();
        handles.into_iter().map(|h| h.join().map_err(|_| ())).collect()
    });
    results
        .into_iter()
        .enumerate()
        .map(|(k, r)| match r {
            Ok(Ok(c)) => Ok(c),
            Ok(Err(source)) => Err(RunError::Sampler { chain: k, source }),
            Err(()) => Err(RunError::ChainPanicked(k)),
        })
        .collect()
}

/// Loads data, samples, and computes summaries and model fit. Writes
/// nothing.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome, RunError> {
    let start = Instant::now();
    let loaded = load_data(cfg)?;
    let n_est = loaded.data.split_point(cfg.split);
    let estimation = loaded.data.prefix(n_est)?;
    let target = assemble_target(cfg, &estimation)?;
    let init = match (&target, cfg.resolve_model()) {
        (Target::Pendulum(p), ResolvedModel::Pendulum { initial_parameters, .. }) => {
            Some(measurement_init(p, &initial_parameters))
        }
        _ => None,
    };
    let mut sampler = cfg.sampler_config();
    if let (Some(z), SamplerKind::Hmc { mass, .. }) = (&init, &mut sampler.kind) {
        *mass = Some(curvature_mass(&target, z));
    }
    let chains = run_chains(&target, &sampler, cfg.seed, cfg.chains, init.as_deref())?;
    let draws = pool(&chains);
    let (summary, fit) = match &target {
        Target::Transfer(p) => (
            pooled_summary(p.space(), &chains, None)?,
            transfer_fit(p, &loaded.data, n_est, &draws)?,
        ),
        Target::Pendulum(p) => (
            pooled_summary(p.space(), &chains, Some(p.state_range()))?,
            pendulum_fit(p, &draws)?,
        ),
    };
    Ok(RunOutcome {
        config: cfg.clone(),
        data: loaded,
        estimation_samples: n_est,
        target,
        chains,
        summary,
        fit,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    })
}
