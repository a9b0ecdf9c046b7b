//! Experiment runner for Bayesian system identification.
//!
//! A JSON [`config::ExperimentConfig`] names a model, priors, a sampler and
//! a data source. [`experiment::run_experiment`] samples the posterior and
//! [`artifacts::write_run`] writes chains, summaries and a manifest.

pub mod artifacts;
pub mod config;
pub mod data;
pub mod experiment;

pub use artifacts::{write_run, RunManifest};
pub use config::{parse_config, ConfigError, ExperimentConfig};
pub use data::{ingest_csv, write_csv, IngestError};
pub use experiment::{assemble_target, run_experiment, RunError, RunOutcome, Target};

/// Environment variable that overrides the configured seed.
pub const SEED_VAR: &str = "HMC_SYSID_SEED";

/// Applies a seed override given as text.
pub fn apply_seed_override(cfg: &mut ExperimentConfig, value: Option<&str>) -> Result<(), ConfigError> {
    if let Some(v) = value {
        cfg.seed = v.trim().parse().map_err(|_| ConfigError::ConstraintViolation {
            path: SEED_VAR.into(),
            message: format!("not an unsigned integer: `{v}`"),
        })?;
    }
    Ok(())
}
