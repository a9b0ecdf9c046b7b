use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use hmc_sysid::artifacts::{check_output_dir, diagnose, frequency_response, write_simulation};
use hmc_sysid::config::ConfigError;
use hmc_sysid::experiment::load_data;
use hmc_sysid::{apply_seed_override, parse_config, run_experiment, write_run, ExperimentConfig, RunError, SEED_VAR};

#[derive(Parser)]
#[command(name = "hmc-sysid", version, about = "Bayesian system identification by MCMC")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate (or ingest) the configured data set.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample the posterior and write chains, summaries and model fit.
    Fit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        chains: Option<usize>,
        #[arg(long)]
        thin: Option<usize>,
    },
    /// Summarize a chain file.
    Diagnose {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        space: PathBuf,
    },
    /// Posterior frequency response of an ARX or OE fit.
    Freqresp {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: &Path) -> Result<ExperimentConfig, RunError> {
    let text = std::fs::read(path).map_err(|e| ConfigError::Parse {
        path: String::new(),
        message: format!("{}: {e}", path.display()),
    })?;
    let mut cfg = parse_config(&text)?;
    apply_seed_override(&mut cfg, std::env::var(SEED_VAR).ok().as_deref())?;
    Ok(cfg)
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json"));
}

fn run(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Simulate { config, out } => {
            let cfg = load_config(&config)?;
            check_output_dir(&out)?;
            let start = Instant::now();
            let loaded = load_data(&cfg)?;
            let manifest = write_simulation(&cfg, &loaded, &out, start.elapsed().as_secs_f64())?;
            eprintln!("wrote {} samples to {}", loaded.data.len(), out.display());
            eprintln!("artifacts: {}", manifest.artifacts.join(", "));
        }
        Command::Fit {
            config,
            out,
            chains,
            thin,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(c) = chains {
                cfg.chains = c;
            }
            if let Some(t) = thin {
                cfg.sampler.thin = t;
            }
            // Re-validate after command-line overrides.
            let cfg = parse_config(cfg.to_canonical_json().as_bytes())?;
            check_output_dir(&out)?;
            let outcome = run_experiment(&cfg)?;
            let manifest = write_run(&outcome, &out)?;
            for c in &manifest.chains {
                eprintln!(
                    "{}: {} draws, acceptance {:.3}, {} divergences",
                    c.file, c.draws, c.acceptance_rate, c.divergences
                );
            }
            eprintln!("finished in {:.1} s; artifacts in {}", manifest.wall_clock_seconds, out.display());
        }
        Command::Diagnose { chain, space } => print_json(&diagnose(&chain, &space)?),
        Command::Freqresp { chain, model, out } => {
            let v = frequency_response(&chain, &model)?;
            let text = serde_json::to_string_pretty(&v).expect("json") + "\n";
            std::fs::write(&out, text).map_err(RunError::io(format!("writing {}", out.display())))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
