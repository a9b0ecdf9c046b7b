//! Files written by a run and the readers used by `diagnose` and `freqresp`.

use std::fs;
use std::path::{Path, PathBuf};

use hmc_sysid_core::diagnostics::{default_frequency_grid, freq_response, summarize_columns, Summary};
use hmc_sysid_core::models::{ArxSpec, OeSpec};
use hmc_sysid_core::numerics::Matrix;
use hmc_sysid_core::posterior::{ParameterSpace, TransferModel};
use hmc_sysid_core::priors::Transform;
use hmc_sysid_core::samplers::Chain;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::config::{ExperimentConfig, ModelKind};
use crate::data::write_csv;
use crate::experiment::{spread_rows, FitReport, LoadedData, RunError, RunOutcome};

/// Draws kept in a `freqresp` output.
pub const MAX_RESPONSE_DRAWS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub file: String,
    pub stream: u64,
    pub draws: usize,
    pub acceptance_rate: f64,
    pub divergences: usize,
    pub step_size: f64,
    pub evaluations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub name: Option<String>,
    pub config: Value,
    pub seed: u64,
    pub data_seed: Option<u64>,
    pub chains: Vec<ChainRecord>,
    pub wall_clock_seconds: f64,
    /// Every file in the output directory, this manifest included.
    pub artifacts: Vec<String>,
    pub version: String,
}

pub const MANIFEST: &str = "manifest.json";

/// Output directory that removes what it wrote unless committed.
struct OutputDir {
    root: PathBuf,
    created_root: bool,
    written: Vec<String>,
    committed: bool,
}

impl OutputDir {
    fn open(root: &Path) -> Result<Self, RunError> {
        let created_root = !root.exists();
        fs::create_dir_all(root).map_err(RunError::io(format!("creating {}", root.display())))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            created_root,
            written: Vec::new(),
            committed: false,
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.root.join(name)
    }

    fn write(&mut self, name: &str, contents: &[u8]) -> Result<(), RunError> {
        let p = self.path(name);
        fs::write(&p, contents).map_err(RunError::io(format!("writing {}", p.display())))
    }

    fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<(), RunError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| RunError::Artifact(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for name in &self.written {
            let _ = fs::remove_file(self.root.join(name));
        }
        if self.created_root {
            let _ = fs::remove_dir(&self.root);
        }
    }
}

/// Fails unless `dir` is absent or empty, so that the manifest can list the
/// directory exactly.
pub fn check_output_dir(dir: &Path) -> Result<(), RunError> {
    if !dir.exists() {
        return Ok(());
    }
    let mut entries = fs::read_dir(dir).map_err(RunError::io(format!("reading {}", dir.display())))?;
    if entries.next().is_some() {
        return Err(crate::config::ConfigError::ConstraintViolation {
            path: "out".into(),
            message: format!("output directory {} is not empty", dir.display()),
        }
        .into());
    }
    Ok(())
}

fn csv_error(e: csv::Error) -> RunError {
    RunError::Artifact(e.to_string())
}

/// `chain.csv` body: unconstrained coordinates, then `log_density` and
/// `accepted`.
pub fn chain_csv(names: &[String], chain: &Chain) -> Result<Vec<u8>, RunError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = names.iter().map(String::as_str).collect();
    header.extend(["log_density", "accepted"]);
    w.write_record(&header).map_err(csv_error)?;
    for i in 0..chain.len() {
        let mut row: Vec<String> = chain.draws.row(i).iter().map(f64::to_string).collect();
        row.push(chain.log_density[i].to_string());
        row.push(if chain.accepted[i] { "1" } else { "0" }.to_string());
        w.write_record(&row).map_err(csv_error)?;
    }
    w.into_inner().map_err(|e| RunError::Artifact(e.to_string()))
}

/// Contents of a `chain.csv` file.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainFile {
    pub names: Vec<String>,
    pub draws: Matrix,
    pub log_density: Vec<f64>,
    pub accepted: Vec<bool>,
}

pub fn read_chain_csv(path: &Path) -> Result<ChainFile, RunError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
    let header: Vec<String> = r.headers().map_err(csv_error)?.iter().map(String::from).collect();
    let d = header.len().checked_sub(2).filter(|_| {
        header.len() >= 2 && header[header.len() - 2] == "log_density" && header[header.len() - 1] == "accepted"
    });
    let d = d.ok_or_else(|| RunError::Artifact(format!("{}: not a chain file", path.display())))?;
    let (mut draws, mut log_density, mut accepted) = (Vec::new(), Vec::new(), Vec::new());
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let vals: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let vals = vals.map_err(|_| RunError::Artifact(format!("{}: row {}: not a number", path.display(), i + 1)))?;
        draws.extend_from_slice(&vals[..d]);
        log_density.push(vals[d]);
        accepted.push(vals[d + 1] != 0.0);
    }
    let rows = log_density.len();
    Ok(ChainFile {
        names: header[..d].to_vec(),
        draws: Matrix::from_row_major(rows, d, draws).map_err(|e| RunError::Artifact(e.to_string()))?,
        log_density,
        accepted,
    })
}

fn transform_json(t: Transform) -> Value {
    match t {
        Transform::Identity => json!({"kind": "identity"}),
        Transform::LogPositive => json!({"kind": "log_positive"}),
        Transform::ShiftedLog { lower } => json!({"kind": "shifted_log", "lower": lower}),
    }
}

pub fn space_json(space: &ParameterSpace) -> Value {
    let blocks: Vec<Value> = space
        .blocks()
        .iter()
        .map(|b| {
            json!({
                "name": b.name,
                "names": b.names,
                "transform": transform_json(b.transform),
                "hyper": b.hyper,
            })
        })
        .collect();
    json!({ "blocks": blocks, "unconstrained_names": space.unconstrained_names() })
}

pub fn read_space_json(path: &Path) -> Result<ParameterSpace, RunError> {
    let bad = |m: &str| RunError::Artifact(format!("{}: {m}", path.display()));
    let text = fs::read_to_string(path).map_err(RunError::io(format!("reading {}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| bad(&e.to_string()))?;
    let mut space = ParameterSpace::new();
    for b in v["blocks"].as_array().ok_or_else(|| bad("missing blocks"))? {
        let names: Vec<String> = serde_json::from_value(b["names"].clone()).map_err(|e| bad(&e.to_string()))?;
        let t = &b["transform"];
        let transform = match t["kind"].as_str() {
            Some("identity") => Transform::Identity,
            Some("log_positive") => Transform::LogPositive,
            Some("shifted_log") => Transform::ShiftedLog {
                lower: t["lower"].as_f64().ok_or_else(|| bad("shifted_log without lower"))?,
            },
            _ => return Err(bad("unknown transform")),
        };
        let name = b["name"].as_str().ok_or_else(|| bad("block without name"))?;
        space.push(name, names, transform, b["hyper"].as_bool().unwrap_or(false));
    }
    Ok(space)
}

fn opt(v: Option<f64>) -> Value {
    v.map_or(Value::Null, Value::from)
}

/// Summary keyed by constrained parameter name.
pub fn summary_json(summary: &Summary, divergences: Option<usize>) -> Value {
    let mut params = Map::new();
    for c in &summary.coordinates {
        params.insert(
            c.name.clone(),
            json!({
                "mean": c.mean,
                "sd": c.sd,
                "q05": c.quantiles[0],
                "q25": c.quantiles[1],
                "q50": c.quantiles[2],
                "q75": c.quantiles[3],
                "q95": c.quantiles[4],
                "iact": opt(c.iact),
                "ess": opt(c.ess),
            }),
        );
    }
    json!({
        "parameters": params,
        "draws": summary.draws,
        "acceptance_rate": summary.acceptance_rate,
        "divergences": divergences,
    })
}

fn fit_json(fit: &FitReport) -> Value {
    match fit {
        FitReport::Transfer {
            estimation_samples,
            validation_samples,
            estimation_fit,
            validation_fit,
            draws_used,
        } => json!({
            "estimation_samples": estimation_samples,
            "validation_samples": validation_samples,
            "estimation_fit": estimation_fit,
            "validation_fit": opt(*validation_fit),
            "draws_used": draws_used,
        }),
        FitReport::Pendulum {
            output_fit, draws_used, ..
        } => json!({
            "output_fit": output_fit,
            "draws_used": draws_used,
        }),
    }
}

/// Model description read back by `freqresp`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_a: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_b: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_f: Option<usize>,
    /// Chain columns holding the coefficients or physical parameters.
    pub columns: Vec<String>,
}

impl ModelFile {
    fn from_outcome(outcome: &RunOutcome) -> Self {
        let space = outcome.target.space();
        let names = space.unconstrained_names();
        let block = if outcome.config.model.kind == ModelKind::Pendulum {
            "parameters"
        } else {
            "coefficients"
        };
        let columns = names[space.block_range(block).expect("model block")].to_vec();
        let m = &outcome.config.model;
        let n = |v: Option<i64>| v.map(|x| x as usize);
        ModelFile {
            kind: m.kind,
            n_a: n(m.n_a),
            n_b: n(m.n_b),
            n_f: n(m.n_f),
            columns,
        }
    }

    pub fn transfer_model(&self) -> Option<TransferModel> {
        match self.kind {
            ModelKind::Arx => Some(TransferModel::Arx(ArxSpec {
                n_a: self.n_a?,
                n_b: self.n_b?,
            })),
            ModelKind::Oe => Some(TransferModel::Oe(OeSpec {
                n_b: self.n_b?,
                n_f: self.n_f?,
            })),
            ModelKind::Pendulum => None,
        }
    }
}

fn states_csv(mean: &Matrix, sd: &Matrix, dt: f64) -> Result<Vec<u8>, RunError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string()];
    header.extend((1..=mean.cols()).map(|i| format!("x{i}_mean")));
    header.extend((1..=mean.cols()).map(|i| format!("x{i}_sd")));
    w.write_record(&header).map_err(csv_error)?;
    for t in 0..mean.rows() {
        let mut row = vec![(t as f64 * dt).to_string()];
        row.extend(mean.row(t).iter().map(f64::to_string));
        row.extend(sd.row(t).iter().map(f64::to_string));
        w.write_record(&row).map_err(csv_error)?;
    }
    w.into_inner().map_err(|e| RunError::Artifact(e.to_string()))
}

fn truth_json(cfg: &ExperimentConfig, loaded: &LoadedData) -> Option<Value> {
    let crate::config::DataConfig::Simulate(sim) = &cfg.data else {
        return None;
    };
    Some(json!({
        "system": sim.system,
        "data_seed": loaded.data_seed,
    }))
}

/// File name of chain `k` out of `n`.
pub fn chain_file_name(k: usize, n: usize) -> String {
    if n == 1 {
        "chain.csv".into()
    } else {
        format!("chain_{}.csv", k + 1)
    }
}

fn finish(mut dir: OutputDir, mut manifest: RunManifest) -> Result<RunManifest, RunError> {
    dir.written.push(MANIFEST.to_string());
    let mut names = dir.written.clone();
    names.sort();
    names.dedup();
    manifest.artifacts = names;
    dir.written.pop();
    dir.write_json(MANIFEST, &manifest)?;
    dir.committed = true;
    Ok(manifest)
}

/// Writes the artifacts of a finished run into `out`.
pub fn write_run(outcome: &RunOutcome, out: &Path) -> Result<RunManifest, RunError> {
    let mut dir = OutputDir::open(out)?;
    let space = outcome.target.space();
    let names = space.unconstrained_names();
    let n = outcome.chains.len();
    let mut records = Vec::with_capacity(n);
    for (k, chain) in outcome.chains.iter().enumerate() {
        let file = chain_file_name(k, n);
        dir.write(&file, &chain_csv(&names, chain)?)?;
        records.push(ChainRecord {
            file,
            stream: chain.stream,
            draws: chain.len(),
            acceptance_rate: chain.acceptance_rate,
            divergences: chain.divergences,
            step_size: chain.step_size,
            evaluations: chain.evaluations,
        });
    }
    let data_path = dir.path("data.csv");
    write_csv(&outcome.data.data, &data_path).map_err(RunError::io("writing data.csv"))?;
    dir.write_json("space.json", &space_json(space))?;
    dir.write_json(
        "summary.json",
        &summary_json(&outcome.summary, Some(outcome.summary.divergences)),
    )?;
    dir.write_json("fit.json", &fit_json(&outcome.fit))?;
    dir.write_json("model.json", &ModelFile::from_outcome(outcome))?;
    if let FitReport::Pendulum {
        state_mean, state_sd, ..
    } = &outcome.fit
    {
        dir.write("states.csv", &states_csv(state_mean, state_sd, outcome.data.data.dt())?)?;
    }
    if let Some(t) = truth_json(&outcome.config, &outcome.data) {
        dir.write_json("truth.json", &t)?;
    }
    if let Some(states) = &outcome.data.true_states {
        let zeros = Matrix::zeros(states.rows(), states.cols());
        dir.write("true_states.csv", &states_csv(states, &zeros, outcome.data.data.dt())?)?;
    }
    let manifest = RunManifest {
        command: "fit".into(),
        name: outcome.config.name.clone(),
        config: serde_json::to_value(&outcome.config).map_err(|e| RunError::Artifact(e.to_string()))?,
        seed: outcome.config.seed,
        data_seed: outcome.data.data_seed,
        chains: records,
        wall_clock_seconds: outcome.wall_clock_seconds,
        artifacts: Vec::new(),
        version: env!("CARGO_PKG_VERSION").into(),
    };
    finish(dir, manifest)
}

/// Writes simulated (or ingested) data and its generating system.
pub fn write_simulation(
    cfg: &ExperimentConfig,
    loaded: &LoadedData,
    out: &Path,
    seconds: f64,
) -> Result<RunManifest, RunError> {
    let mut dir = OutputDir::open(out)?;
    let data_path = dir.path("data.csv");
    write_csv(&loaded.data, &data_path).map_err(RunError::io("writing data.csv"))?;
    if let Some(t) = truth_json(cfg, loaded) {
        dir.write_json("truth.json", &t)?;
    }
    if let Some(states) = &loaded.true_states {
        let zeros = Matrix::zeros(states.rows(), states.cols());
        dir.write("true_states.csv", &states_csv(states, &zeros, loaded.data.dt())?)?;
    }
    let manifest = RunManifest {
        command: "simulate".into(),
        name: cfg.name.clone(),
        config: serde_json::to_value(cfg).map_err(|e| RunError::Artifact(e.to_string()))?,
        seed: cfg.seed,
        data_seed: loaded.data_seed,
        chains: Vec::new(),
        wall_clock_seconds: seconds,
        artifacts: Vec::new(),
        version: env!("CARGO_PKG_VERSION").into(),
    };
    finish(dir, manifest)
}

/// Summary of a chain file under the transforms of a space file.
pub fn diagnose(chain: &Path, space: &Path) -> Result<Value, RunError> {
    let file = read_chain_csv(chain)?;
    let space = read_space_json(space)?;
    if file.names != space.unconstrained_names() {
        return Err(RunError::Artifact("chain columns do not match the parameter space".into()));
    }
    let (rows, d) = (file.draws.rows(), file.draws.cols());
    let mut data = Vec::with_capacity(rows * d);
    for i in 0..rows {
        data.extend(space.constrain(file.draws.row(i)));
    }
    let constrained = Matrix::from_row_major(rows, d, data).map_err(|e| RunError::Artifact(e.to_string()))?;
    let hyper = space.hyper_mask();
    let states = space.block_range("states");
    let columns: Vec<usize> = (0..d)
        .filter(|j| !hyper[*j] && !states.as_ref().is_some_and(|r| r.contains(j)))
        .collect();
    let accepted = file.accepted.iter().filter(|a| **a).count() as f64 / rows.max(1) as f64;
    let summary = summarize_columns(&constrained, &space.constrained_names(), &columns, accepted, 0)?;
    Ok(summary_json(&summary, None))
}

/// Posterior frequency response from a chain and `model.json`.
pub fn frequency_response(chain: &Path, model: &Path) -> Result<Value, RunError> {
    let text = fs::read_to_string(model).map_err(RunError::io(format!("reading {}", model.display())))?;
    let m: ModelFile = serde_json::from_str(&text).map_err(|e| RunError::Artifact(e.to_string()))?;
    let tm = m
        .transfer_model()
        .ok_or_else(|| RunError::Artifact("frequency responses need an arx or oe model".into()))?;
    let file = read_chain_csv(chain)?;
    let idx: Vec<usize> = m
        .columns
        .iter()
        .map(|c| {
            file.names
                .iter()
                .position(|n| n == c)
                .ok_or_else(|| RunError::Artifact(format!("chain has no column `{c}`")))
        })
        .collect::<Result<_, _>>()?;
    let rows = spread_rows(file.draws.rows(), MAX_RESPONSE_DRAWS);
    let mut coeffs = Vec::with_capacity(rows.len() * idx.len());
    for &i in &rows {
        let r = file.draws.row(i);
        coeffs.extend(idx.iter().map(|&j| r[j]));
    }
    let coeffs = Matrix::from_row_major(rows.len(), idx.len(), coeffs).map_err(|e| RunError::Artifact(e.to_string()))?;
    let resp = freq_response(&tm, &coeffs, &default_frequency_grid())?;
    let re: Vec<Vec<f64>> = resp.values.iter().map(|v| v.iter().map(|c| c.re).collect()).collect();
    let im: Vec<Vec<f64>> = resp.values.iter().map(|v| v.iter().map(|c| c.im).collect()).collect();
    let mean_re: Vec<f64> = resp.mean.iter().map(|c| c.re).collect();
    let mean_im: Vec<f64> = resp.mean.iter().map(|c| c.im).collect();
    Ok(json!({
        "omega": resp.omega,
        "mean": {"re": mean_re, "im": mean_im},
        "excluded": resp.excluded,
        "draws": {"re": re, "im": im},
    }))
}
