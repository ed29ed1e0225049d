use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use leomf_core::checks;
use leomf_core::runner::{self, ExperimentConfig, SweepAxis};

#[derive(Parser)]
#[command(
    name = "leomf",
    version,
    about = "Energy-efficiency learning for LEO satellites with multi-functional surfaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train or roll out every seed of an experiment.
    Run {
        config: PathBuf,
        /// Run only this seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeat an experiment across values of one axis.
    Sweep {
        config: PathBuf,
        /// num_leo | num_elements | on_fraction | group_size | num_antennas
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in invariant and oracle checks.
    Check,
}

fn load(config: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(s) = seed {
        cfg.seeds = vec![s];
    }
    let out = out.unwrap_or_else(|| cfg.output.clone());
    Ok((cfg, out))
}

fn real_main() -> Result<bool> {
    match Cli::parse().command {
        Command::Run { config, seed, out } => {
            let (cfg, out) = load(&config, seed, out)?;
            for s in runner::run(&cfg, &out).with_context(|| format!("running {}", config.display()))? {
                println!(
                    "{} seed {}: first-window EE {:.6}, final-window EE {:.6}, final-window reward {:.6}",
                    s.algorithm.as_str(),
                    s.seed,
                    s.first_window_ee,
                    s.final_window_ee,
                    s.final_window_reward
                );
            }
            println!("outputs in {}", out.display());
            Ok(true)
        }
        Command::Sweep { config, axis, values, seed, out } => {
            let (cfg, out) = load(&config, seed, out)?;
            let axis = SweepAxis::parse(&axis)?;
            if values.is_empty() {
                bail!("--values is empty");
            }
            for r in runner::sweep(&cfg, axis, &values, &out)? {
                println!("{}={} seed {}: final-window EE {:.6}", r.axis, r.value, r.seed, r.final_window_ee);
            }
            println!("summary in {}", out.join("sweep.csv").display());
            Ok(true)
        }
        Command::Check => {
            let results = checks::run_all();
            for r in &results {
                println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            Ok(results.iter().all(|r| r.passed))
        }
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
