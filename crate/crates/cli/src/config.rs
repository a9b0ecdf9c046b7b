//! Declarative experiment configuration (JSON).
//!
//! Parsing fills every default, so `serialize(parse(x))` is the canonical
//! form of `x` and parses back to the same value.

use std::collections::BTreeMap;

use hmc_sysid_core::models::{
    ArxSpec, InputSignal, Integrator, NlssModel, NlssSpec, NoiseModel, OeSpec, Pendulum, PendulumConstants, SimModel,
};
use hmc_sysid_core::posterior::{NoiseFamily, NoiseScale, TransferModel, TransferOptions};
use hmc_sysid_core::priors::PriorSpec;
use hmc_sysid_core::samplers::{SamplerConfig, SamplerKind};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("parse error at `{path}`: {message}")]
    Parse { path: String, message: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid value at `{path}`: {message}")]
    ConstraintViolation { path: String, message: String },
}

fn violation(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::ConstraintViolation {
        path: path.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub model: ModelConfig,
    /// Prior per parameter block: `coefficients`, `sigma_e`, `nu` or
    /// `parameters`, depending on the model.
    #[serde(default)]
    pub priors: BTreeMap<String, PriorConfig>,
    #[serde(default)]
    pub sampler: SamplerSettings,
    pub data: DataConfig,
    /// Fraction of leading samples used for estimation.
    #[serde(default = "default_split")]
    pub split: f64,
    #[serde(default = "default_chains")]
    pub chains: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_split() -> f64 {
    1.0
}

fn default_chains() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Arx,
    Oe,
    Pendulum,
}

/// Model structure. Order fields apply to `arx` (`n_a`, `n_b`) and `oe`
/// (`n_b`, `n_f`); the remaining optional fields apply to `pendulum`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_a: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_b: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_f: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<ConstantsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub process_sd: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measurement_sd: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_mean: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_sd: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub substeps: Option<usize>,
    /// Starting parameter values for the chains.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_parameters: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamilyKind {
    #[default]
    Gaussian,
    StudentT,
}

/// Noise model of a transfer-function fit; `sigma = null` samples the scale.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default)]
    pub family: NoiseFamilyKind,
    #[serde(default)]
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    pub m_p: f64,
    pub l_p: f64,
    pub l_r: f64,
    pub g: f64,
}

impl From<PendulumConstants> for ConstantsConfig {
    fn from(c: PendulumConstants) -> Self {
        ConstantsConfig {
            m_p: c.m_p,
            l_p: c.l_p,
            l_r: c.l_r,
            g: c.g,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorKind {
    Gaussian,
    Laplace,
    Horseshoe,
    Gamma,
    HalfCauchy,
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    pub kind: PriorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
}

impl PriorConfig {
    fn scaled(kind: PriorKind, scale: f64) -> Self {
        PriorConfig {
            kind,
            scale: Some(scale),
            shape: None,
            rate: None,
        }
    }

    fn bare(kind: PriorKind) -> Self {
        PriorConfig {
            kind,
            scale: None,
            shape: None,
            rate: None,
        }
    }

    fn gamma(shape: f64, rate: f64) -> Self {
        PriorConfig {
            kind: PriorKind::Gamma,
            scale: None,
            shape: Some(shape),
            rate: Some(rate),
        }
    }

    /// Fills a missing scale and checks that only the fields of `kind` are set.
    fn normalize(&mut self, path: &str) -> Result<(), ConfigError> {
        let default_scale = match self.kind {
            PriorKind::Gaussian => Some(PriorSpec::DEFAULT_GAUSSIAN_SCALE),
            PriorKind::Laplace => Some(PriorSpec::DEFAULT_LAPLACE_SCALE),
            PriorKind::HalfCauchy => Some(1.0),
            _ => None,
        };
        match default_scale {
            Some(d) => {
                self.scale.get_or_insert(d);
            }
            None if self.scale.is_some() => return Err(violation(&format!("{path}.scale"), "not used by this prior")),
            None => {}
        }
        if self.kind == PriorKind::Gamma {
            if self.shape.is_none() {
                return Err(violation(&format!("{path}.shape"), "required for a gamma prior"));
            }
            if self.rate.is_none() {
                return Err(violation(&format!("{path}.rate"), "required for a gamma prior"));
            }
        } else if self.shape.is_some() || self.rate.is_some() {
            let key = if self.shape.is_some() { "shape" } else { "rate" };
            return Err(violation(&format!("{path}.{key}"), "only used by a gamma prior"));
        }
        let spec = self.to_spec();
        spec.validate().map_err(|e| violation(path, e.to_string()))
    }

    pub fn to_spec(&self) -> PriorSpec {
        let scale = self.scale.unwrap_or(1.0);
        match self.kind {
            PriorKind::Gaussian => PriorSpec::Gaussian { scale },
            PriorKind::Laplace => PriorSpec::Laplace { scale },
            PriorKind::Horseshoe => PriorSpec::Horseshoe,
            PriorKind::Gamma => PriorSpec::Gamma {
                shape: self.shape.unwrap_or(1.0),
                rate: self.rate.unwrap_or(1.0),
            },
            PriorKind::HalfCauchy => PriorSpec::HalfCauchy { scale },
            PriorKind::Flat => PriorSpec::Flat,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerName {
    Mh,
    Mmala,
    Hmc,
}

/// Sampler settings; `trajectory_length` and `jitter` apply to HMC only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSettings {
    #[serde(default = "default_sampler")]
    pub kind: SamplerName,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_trajectory")]
    pub trajectory_length: f64,
    #[serde(default = "default_jitter")]
    pub jitter: f64,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_warmup")]
    pub warmup: usize,
    #[serde(default)]
    pub target_accept: Option<f64>,
    #[serde(default = "yes")]
    pub adapt_step: bool,
    #[serde(default = "yes")]
    pub adapt_metric: bool,
    #[serde(default = "default_thin")]
    pub thin: usize,
}

fn default_sampler() -> SamplerName {
    SamplerName::Hmc
}

fn default_step() -> f64 {
    0.1
}

fn default_trajectory() -> f64 {
    1.0
}

fn default_jitter() -> f64 {
    0.2
}

fn default_iterations() -> usize {
    SamplerConfig::default().iterations
}

fn default_warmup() -> usize {
    SamplerConfig::default().warmup
}

fn yes() -> bool {
    true
}

fn default_thin() -> usize {
    1
}

impl Default for SamplerSettings {
    fn default() -> Self {
        SamplerSettings {
            kind: default_sampler(),
            step: default_step(),
            trajectory_length: default_trajectory(),
            jitter: default_jitter(),
            iterations: default_iterations(),
            warmup: default_warmup(),
            target_accept: None,
            adapt_step: true,
            adapt_metric: true,
            thin: default_thin(),
        }
    }
}

impl SamplerSettings {
    pub fn to_config(&self) -> SamplerConfig {
        let kind = match self.kind {
            SamplerName::Mh => SamplerKind::Mh {
                step: self.step,
                proposal_cov: None,
            },
            SamplerName::Mmala => SamplerKind::Mmala { step: self.step },
            SamplerName::Hmc => SamplerKind::Hmc {
                step: self.step,
                trajectory_length: self.trajectory_length,
                jitter: self.jitter,
                mass: None,
            },
        };
        SamplerConfig {
            kind,
            iterations: self.iterations,
            warmup: self.warmup,
            target_accept: self.target_accept,
            adapt_step: self.adapt_step,
            adapt_metric: self.adapt_metric,
            thin: self.thin,
        }
    }
}

/// Either a CSV file or a simulation recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataConfig {
    File(String),
    Simulate(SimulateConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub system: SystemConfig,
    pub input: InputConfig,
    pub length: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Data seed; the experiment seed is used when absent.
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_dt() -> f64 {
    1.0
}

/// Data-generating system. `arx` and `oe` take orders, `coefficients` and
/// `noise`; `pendulum` takes `parameters` and `x0` and reuses the noise
/// scales of the fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_a: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_b: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_f: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<TrueNoiseConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameters: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrueNoiseConfig {
    pub family: NoiseFamilyKind,
    pub sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    RandomBinary,
    SquareWave,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    pub kind: InputKind,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    /// Sign hold length of a random binary signal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hold: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<usize>,
}

fn default_amplitude() -> f64 {
    1.0
}

impl InputConfig {
    pub fn to_signal(&self) -> InputSignal {
        match self.kind {
            InputKind::RandomBinary => InputSignal::RandomBinary {
                amplitude: self.amplitude,
                hold: self.hold.unwrap_or(1),
            },
            InputKind::SquareWave => InputSignal::SquareWave {
                period: self.period.unwrap_or(2),
                amplitude: self.amplitude,
            },
        }
    }
}

/// Model structure resolved from a validated config.
#[derive(Debug, Clone, PartialEq)]
pub enum ResolvedModel {
    Transfer {
        model: TransferModel,
        options: TransferOptions,
    },
    Pendulum {
        spec: NlssSpec<NlssModel>,
        prior: PriorSpec,
        initial_parameters: Vec<f64>,
    },
}

/// Nominal pendulum parameters `(J_r, J_p, k_m, R_m, D_p, D_r)`.
pub const PENDULUM_NOMINAL: [f64; 6] = [5.7e-5, 3.3e-5, 0.042, 8.4, 1.4e-4, 1e-3];

fn order(value: Option<i64>, path: &str) -> Result<usize, ConfigError> {
    match value {
        None => Err(violation(path, "required")),
        Some(v) if v < 0 => Err(violation(path, format!("must be non-negative, got {v}"))),
        Some(v) => Ok(v as usize),
    }
}

fn forbid<T>(value: &Option<T>, path: &str, why: &str) -> Result<(), ConfigError> {
    match value {
        Some(_) => Err(violation(path, why.to_string())),
        None => Ok(()),
    }
}

fn positive(v: f64, path: &str) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(violation(path, format!("must be positive and finite, got {v}")))
    }
}

fn sized(v: &[f64], n: usize, path: &str) -> Result<(), ConfigError> {
    if v.len() != n {
        return Err(violation(path, format!("expected {n} values, got {}", v.len())));
    }
    if let Some(x) = v.iter().find(|x| !x.is_finite()) {
        return Err(violation(path, format!("non-finite value {x}")));
    }
    Ok(())
}

impl ModelConfig {
    fn transfer(&self) -> Result<Option<TransferModel>, ConfigError> {
        match self.kind {
            ModelKind::Arx => {
                forbid(&self.n_f, "model.n_f", "not used by an arx model")?;
                Ok(Some(TransferModel::Arx(ArxSpec {
                    n_a: order(self.n_a, "model.n_a")?,
                    n_b: order(self.n_b, "model.n_b")?,
                })))
            }
            ModelKind::Oe => {
                forbid(&self.n_a, "model.n_a", "not used by an oe model")?;
                Ok(Some(TransferModel::Oe(OeSpec {
                    n_b: order(self.n_b, "model.n_b")?,
                    n_f: order(self.n_f, "model.n_f")?,
                })))
            }
            ModelKind::Pendulum => Ok(None),
        }
    }

    fn normalize(&mut self) -> Result<(), ConfigError> {
        let pendulum_only = [
            ("model.constants", self.constants.is_some()),
            ("model.process_sd", self.process_sd.is_some()),
            ("model.measurement_sd", self.measurement_sd.is_some()),
            ("model.initial_mean", self.initial_mean.is_some()),
            ("model.initial_sd", self.initial_sd.is_some()),
            ("model.substeps", self.substeps.is_some()),
            ("model.initial_parameters", self.initial_parameters.is_some()),
        ];
        if self.kind == ModelKind::Pendulum {
            for (path, v) in [("model.n_a", self.n_a), ("model.n_b", self.n_b), ("model.n_f", self.n_f)] {
                forbid(&v, path, "not used by a pendulum model")?;
            }
            forbid(&self.noise, "model.noise", "pendulum noise is set by process_sd and measurement_sd")?;
            let c = *self.constants.get_or_insert(PendulumConstants::default().into());
            for (v, p) in [
                (c.m_p, "model.constants.m_p"),
                (c.l_p, "model.constants.l_p"),
                (c.l_r, "model.constants.l_r"),
                (c.g, "model.constants.g"),
            ] {
                positive(v, p)?;
            }
            let q = self
                .process_sd
                .as_ref()
                .ok_or_else(|| violation("model.process_sd", "required"))?;
            sized(q, 4, "model.process_sd")?;
            q.iter().try_for_each(|v| positive(*v, "model.process_sd"))?;
            let r = self
                .measurement_sd
                .as_ref()
                .ok_or_else(|| violation("model.measurement_sd", "required"))?;
            sized(r, 3, "model.measurement_sd")?;
            r.iter().try_for_each(|v| positive(*v, "model.measurement_sd"))?;
            sized(self.initial_mean.get_or_insert(vec![0.0; 4]), 4, "model.initial_mean")?;
            let s0 = self.initial_sd.get_or_insert(vec![1.0; 4]);
            sized(s0, 4, "model.initial_sd")?;
            s0.iter().try_for_each(|v| positive(*v, "model.initial_sd"))?;
            if *self.substeps.get_or_insert(1) == 0 {
                return Err(violation("model.substeps", "must be at least 1"));
            }
            let p0 = self.initial_parameters.get_or_insert(PENDULUM_NOMINAL.to_vec());
            sized(p0, 6, "model.initial_parameters")?;
            p0.iter().try_for_each(|v| positive(*v, "model.initial_parameters"))?;
        } else {
            for (path, set) in pendulum_only {
                if set {
                    return Err(violation(path, "only used by a pendulum model"));
                }
            }
            self.transfer()?;
            let noise = self.noise.get_or_insert_with(NoiseConfig::default);
            if let Some(s) = noise.sigma {
                positive(s, "model.noise.sigma")?;
            }
        }
        Ok(())
    }

    /// Prior blocks the model samples, with their defaults.
    fn blocks(&self) -> Vec<(&'static str, PriorConfig)> {
        match self.kind {
            ModelKind::Pendulum => vec![("parameters", PriorConfig::bare(PriorKind::Horseshoe))],
            _ => {
                let noise = self.noise.unwrap_or_default();
                let mut out = vec![(
                    "coefficients",
                    PriorConfig::scaled(PriorKind::Gaussian, PriorSpec::DEFAULT_GAUSSIAN_SCALE),
                )];
                if noise.sigma.is_none() {
                    out.push(("sigma_e", PriorConfig::scaled(PriorKind::HalfCauchy, 1.0)));
                }
                if noise.family == NoiseFamilyKind::StudentT {
                    out.push(("nu", PriorConfig::gamma(2.0, 0.1)));
                }
                out
            }
        }
    }
}

impl SimulateConfig {
    fn normalize(&mut self, model: ModelKind) -> Result<(), ConfigError> {
        if self.length == 0 {
            return Err(violation("data.simulate.length", "must be positive"));
        }
        positive(self.dt, "data.simulate.dt")?;
        positive(self.input.amplitude, "data.simulate.input.amplitude")?;
        match self.input.kind {
            InputKind::RandomBinary => {
                forbid(&self.input.period, "data.simulate.input.period", "only used by a square wave")?;
                if *self.input.hold.get_or_insert(1) == 0 {
                    return Err(violation("data.simulate.input.hold", "must be at least 1"));
                }
            }
            InputKind::SquareWave => {
                forbid(&self.input.hold, "data.simulate.input.hold", "only used by a random binary signal")?;
                let p = self
                    .input
                    .period
                    .ok_or_else(|| violation("data.simulate.input.period", "required"))?;
                if p < 2 {
                    return Err(violation("data.simulate.input.period", "must be at least 2"));
                }
            }
        }
        let s = &mut self.system;
        if (s.kind == ModelKind::Pendulum) != (model == ModelKind::Pendulum) {
            return Err(violation(
                "data.simulate.system.kind",
                "pendulum data requires a pendulum model and vice versa",
            ));
        }
        if s.kind == ModelKind::Pendulum {
            for (path, set) in [
                ("data.simulate.system.n_a", s.n_a.is_some()),
                ("data.simulate.system.n_b", s.n_b.is_some()),
                ("data.simulate.system.n_f", s.n_f.is_some()),
                ("data.simulate.system.coefficients", s.coefficients.is_some()),
                ("data.simulate.system.noise", s.noise.is_some()),
            ] {
                if set {
                    return Err(violation(path, "not used by a pendulum system"));
                }
            }
            let p = s
                .parameters
                .as_ref()
                .ok_or_else(|| violation("data.simulate.system.parameters", "required"))?;
            sized(p, 6, "data.simulate.system.parameters")?;
            p.iter()
                .try_for_each(|v| positive(*v, "data.simulate.system.parameters"))?;
            sized(s.x0.get_or_insert(vec![0.0; 4]), 4, "data.simulate.system.x0")?;
            return Ok(());
        }
        forbid(&s.parameters, "data.simulate.system.parameters", "only used by a pendulum system")?;
        forbid(&s.x0, "data.simulate.system.x0", "only used by a pendulum system")?;
        let n = match s.kind {
            ModelKind::Arx => {
                forbid(&s.n_f, "data.simulate.system.n_f", "not used by an arx system")?;
                ArxSpec {
                    n_a: order(s.n_a, "data.simulate.system.n_a")?,
                    n_b: order(s.n_b, "data.simulate.system.n_b")?,
                }
                .n_coeffs()
            }
            _ => {
                forbid(&s.n_a, "data.simulate.system.n_a", "not used by an oe system")?;
                OeSpec {
                    n_b: order(s.n_b, "data.simulate.system.n_b")?,
                    n_f: order(s.n_f, "data.simulate.system.n_f")?,
                }
                .n_coeffs()
            }
        };
        let c = s
            .coefficients
            .as_ref()
            .ok_or_else(|| violation("data.simulate.system.coefficients", "required"))?;
        sized(c, n, "data.simulate.system.coefficients")?;
        let noise = s
            .noise
            .as_mut()
            .ok_or_else(|| violation("data.simulate.system.noise", "required"))?;
        if !(noise.sigma >= 0.0 && noise.sigma.is_finite()) {
            return Err(violation("data.simulate.system.noise.sigma", "must be non-negative"));
        }
        match noise.family {
            NoiseFamilyKind::Gaussian => forbid(
                &noise.nu,
                "data.simulate.system.noise.nu",
                "only used by Student-t noise",
            ),
            NoiseFamilyKind::StudentT => match noise.nu {
                Some(nu) if nu >= 1.0 && nu.is_finite() => Ok(()),
                Some(nu) => Err(violation("data.simulate.system.noise.nu", format!("must be at least 1, got {nu}"))),
                None => Err(violation("data.simulate.system.noise.nu", "required")),
            },
        }
    }

    /// Linear data-generating system; `None` for a pendulum.
    pub fn sim_model(&self) -> Option<SimModel> {
        let s = &self.system;
        let noise = s.noise?;
        let noise = match noise.family {
            NoiseFamilyKind::Gaussian => NoiseModel::Gaussian { sigma: noise.sigma },
            NoiseFamilyKind::StudentT => NoiseModel::StudentT {
                nu: noise.nu.unwrap_or(1.0),
                sigma: noise.sigma,
            },
        };
        let coeffs = s.coefficients.clone()?;
        let n = |v: Option<i64>| v.unwrap_or(0) as usize;
        Some(match s.kind {
            ModelKind::Arx => SimModel::Arx {
                spec: ArxSpec {
                    n_a: n(s.n_a),
                    n_b: n(s.n_b),
                },
                coeffs,
                noise,
            },
            ModelKind::Oe => SimModel::Oe {
                spec: OeSpec {
                    n_b: n(s.n_b),
                    n_f: n(s.n_f),
                },
                coeffs,
                noise,
            },
            ModelKind::Pendulum => return None,
        })
    }
}

impl ExperimentConfig {
    fn normalize(&mut self) -> Result<(), ConfigError> {
        self.model.normalize()?;
        let blocks = self.model.blocks();
        for key in self.priors.keys() {
            if !blocks.iter().any(|(b, _)| b == key) {
                let known: Vec<&str> = blocks.iter().map(|(b, _)| *b).collect();
                return Err(violation(
                    &format!("priors.{key}"),
                    format!("not a parameter block of this model (expected one of {known:?})"),
                ));
            }
        }
        for (block, default) in blocks {
            let path = format!("priors.{block}");
            let prior = self.priors.entry(block.to_string()).or_insert(default);
            prior.normalize(&path)?;
            let allowed = match block {
                "coefficients" => !matches!(prior.kind, PriorKind::Gamma | PriorKind::HalfCauchy),
                "parameters" => prior.kind != PriorKind::Flat,
                _ => prior.kind != PriorKind::Horseshoe,
            };
            if !allowed {
                return Err(violation(&path, format!("{:?} prior cannot be used here", prior.kind)));
            }
        }
        let s = &self.sampler;
        if !(s.step > 0.0 && s.step.is_finite()) {
            return Err(violation("sampler.step", "must be positive"));
        }
        if !(s.trajectory_length > 0.0 && s.trajectory_length.is_finite()) {
            return Err(violation("sampler.trajectory_length", "must be positive"));
        }
        if !(0.0..1.0).contains(&s.jitter) {
            return Err(violation("sampler.jitter", "must lie in [0, 1)"));
        }
        if s.iterations <= s.warmup {
            return Err(violation("sampler.iterations", "must exceed sampler.warmup"));
        }
        if s.thin == 0 {
            return Err(violation("sampler.thin", "must be at least 1"));
        }
        if let Some(a) = s.target_accept {
            if !(a > 0.0 && a < 1.0) {
                return Err(violation("sampler.target_accept", "must lie in (0, 1)"));
            }
        }
        if !(self.split > 0.0 && self.split <= 1.0) {
            return Err(violation("split", format!("must lie in (0, 1], got {}", self.split)));
        }
        if self.model.kind == ModelKind::Pendulum && self.split != 1.0 {
            return Err(violation("split", "pendulum fits use all samples (split = 1)"));
        }
        if self.chains == 0 {
            return Err(violation("chains", "must be at least 1"));
        }
        match &mut self.data {
            DataConfig::File(path) if path.is_empty() => Err(violation("data.file", "empty path")),
            DataConfig::File(_) => Ok(()),
            DataConfig::Simulate(sim) => sim.normalize(self.model.kind),
        }
    }

    /// Canonical JSON text of a validated config.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn sampler_config(&self) -> SamplerConfig {
        self.sampler.to_config()
    }

    fn prior(&self, block: &str) -> PriorSpec {
        self.priors[block].to_spec()
    }

    pub fn resolve_model(&self) -> ResolvedModel {
        match self.model.transfer().expect("validated") {
            Some(model) => {
                let noise = self.model.noise.unwrap_or_default();
                let family = match noise.family {
                    NoiseFamilyKind::Gaussian => NoiseFamily::Gaussian,
                    NoiseFamilyKind::StudentT => NoiseFamily::StudentT {
                        nu_prior: self.prior("nu"),
                    },
                };
                let scale = match noise.sigma {
                    Some(s) => NoiseScale::Known(s),
                    None => NoiseScale::Sampled(self.prior("sigma_e")),
                };
                ResolvedModel::Transfer {
                    model,
                    options: TransferOptions {
                        coeff_prior: self.prior("coefficients"),
                        family,
                        scale,
                    },
                }
            }
            None => {
                let m = &self.model;
                let c = m.constants.expect("validated");
                let spec = NlssSpec {
                    dynamics: NlssModel::Pendulum(Pendulum {
                        constants: PendulumConstants {
                            m_p: c.m_p,
                            l_p: c.l_p,
                            l_r: c.l_r,
                            g: c.g,
                        },
                    }),
                    process_sd: m.process_sd.clone().expect("validated"),
                    measurement_sd: m.measurement_sd.clone().expect("validated"),
                    integrator: Integrator::Rk4 {
                        substeps: m.substeps.expect("validated"),
                    },
                    initial_mean: m.initial_mean.clone().expect("validated"),
                    initial_sd: m.initial_sd.clone().expect("validated"),
                };
                ResolvedModel::Pendulum {
                    spec,
                    prior: self.prior("parameters"),
                    initial_parameters: m.initial_parameters.clone().expect("validated"),
                }
            }
        }
    }
}

/// Parses, validates and default-fills a JSON config.
pub fn parse_config(text: &[u8]) -> Result<ExperimentConfig, ConfigError> {
    let text = std::str::from_utf8(text).map_err(|e| ConfigError::Parse {
        path: String::new(),
        message: e.to_string(),
    })?;
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let message = e.inner().to_string();
        if message.starts_with("unknown field") {
            ConfigError::UnknownKey(path)
        } else {
            ConfigError::Parse { path, message }
        }
    })?;
    cfg.normalize()?;
    Ok(cfg)
}
