use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};
use sgrpo_cli::error::io_err;
use sgrpo_cli::report::{frontier_report, parse_reference, render_svg};
use sgrpo_cli::sweep::{disambiguate, load_checkpoint, read_csv, run_sweep, write_csv};
use sgrpo_cli::train::run_train;
use sgrpo_cli::verify::{run_verify, VerifyRequest};
use sgrpo_cli::{CliError, ExperimentConfig, Result};
use sgrpo_core::theory::CheckMode;

#[derive(Parser)]
#[command(name = "sgrpo", version, about = "Train, sweep and compare diversity-aware policy optimizers on a toy sequence task")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.directory`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(out) = &self.out {
            cfg.output.directory = out.clone();
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train one policy; writes checkpoints and a JSONL log.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Decode checkpoints across the temperature grid; writes sweep.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Checkpoint files to sweep.
        #[arg(required = true)]
        checkpoints: Vec<PathBuf>,
    },
    /// Hypervolume, DIP and R2 per model from sweep CSVs; writes frontier.json.
    Frontier {
        #[command(flatten)]
        common: Common,
        /// Reference point `U,V` instead of the componentwise minimum.
        #[arg(long = "ref", value_parser = parse_reference)]
        reference: Option<(f64, f64)>,
        /// Also write frontier.svg.
        #[arg(long)]
        svg: bool,
        /// Sweep CSV files.
        #[arg(required = true)]
        csv: Vec<PathBuf>,
    },
    /// Empirical checks of partition consistency and concentration.
    Verify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        check: VerifyArgs,
    },
}

#[derive(Args)]
#[group(skip)]
struct VerifyArgs {
    /// Partition consistency on random dissimilarity matrices.
    #[arg(long, conflicts_with = "concentration", required_unless_present = "concentration")]
    partition: bool,
    /// Concentration of small-group diversity on toy-policy samples.
    #[arg(long)]
    concentration: bool,
    /// Enumerate every balanced partition (default).
    #[arg(long, conflicts_with = "monte_carlo")]
    exhaustive: bool,
    /// Sample random balanced partitions.
    #[arg(long)]
    monte_carlo: bool,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    k: usize,
    /// Random matrices for the partition check.
    #[arg(long, default_value_t = 1)]
    matrices: usize,
    /// Partitions per matrix in Monte-Carlo mode.
    #[arg(long, default_value_t = 10_000)]
    partitions: usize,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
}

fn out_dir(cfg: &ExperimentConfig) -> Result<&Path> {
    let dir = cfg.output.directory.as_path();
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    Ok(dir)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { common } => {
            let mut cfg = common.load()?;
            if let Some(seed) = common.seed {
                cfg.train.seed = seed;
            }
            let summary = run_train(&cfg, &cfg.output.directory)?;
            match &summary.last {
                Some(last) => println!(
                    "trained {} ({}) for {} steps: mean utility {:.4}, group diversity {:.4}, kl {:.4}; {} checkpoints in {}",
                    summary.model,
                    summary.mode,
                    summary.steps,
                    last.mean_utility,
                    last.mean_group_diversity,
                    last.kl,
                    summary.checkpoints.len(),
                    cfg.output.directory.display()
                ),
                None => println!(
                    "trained {} ({}) for 0 steps; initial checkpoint in {}",
                    summary.model,
                    summary.mode,
                    cfg.output.directory.display()
                ),
            }
        }
        Command::Sweep { common, checkpoints } => {
            let mut cfg = common.load()?;
            if let Some(seed) = common.seed {
                cfg.sweep.seeds = vec![seed];
            }
            let mut models = checkpoints.iter().map(|p| load_checkpoint(p)).collect::<Result<Vec<_>>>()?;
            disambiguate(&mut models, &checkpoints);
            let rows = run_sweep(&models, &cfg)?;
            let path = out_dir(&cfg)?.join("sweep.csv");
            write_csv(&rows, &path)?;
            println!("{} operating points written to {}", rows.len(), path.display());
        }
        Command::Frontier {
            common,
            reference,
            svg,
            csv,
        } => {
            let cfg = common.load()?;
            let mut rows = Vec::new();
            for path in &csv {
                rows.extend(read_csv(path)?);
            }
            if let Some(seed) = common.seed {
                rows.retain(|r| r.seed == seed);
            }
            let report = frontier_report(&rows, reference)?;
            let dir = out_dir(&cfg)?;
            let path = dir.join("frontier.json");
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            fs::write(&path, json + "\n").map_err(io_err(&path))?;
            if svg {
                let svg_path = dir.join("frontier.svg");
                fs::write(&svg_path, render_svg(&report)).map_err(io_err(&svg_path))?;
            }
            for (name, m) in &report.models {
                println!(
                    "{name}: hv {:.5} (seeds {:.5} ± {:.5}), dip {:.4}, r2 {:.4}",
                    m.hv, m.hv_seeds.mean, m.hv_seeds.ci95, m.dip, m.r2
                );
            }
        }
        Command::Verify { common, check } => {
            let cfg = common.load()?;
            let seed = common.seed.unwrap_or(0);
            let req = if check.partition {
                let n = check.n.unwrap_or(check.m * check.k);
                VerifyRequest::Partition {
                    mode: if check.monte_carlo {
                        CheckMode::MonteCarlo
                    } else {
                        CheckMode::Exhaustive
                    },
                    n,
                    m: check.m,
                    k: check.k,
                    matrices: check.matrices,
                    partitions: check.partitions,
                    seed,
                }
            } else {
                VerifyRequest::Concentration {
                    m: check.m,
                    k: check.k,
                    epsilon: check.eps,
                    trials: check.trials,
                    seed,
                    task: cfg.task(),
                }
            };
            let report = run_verify(&req)?;
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            println!("{json}");
            if common.out.is_some() {
                let path = out_dir(&cfg)?.join("verify.json");
                fs::write(&path, json + "\n").map_err(io_err(&path))?;
            }
            if !report.passed() {
                return Err(CliError::Input("verification failed".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = match &cli.command {
        Command::Train { .. } => "train",
        Command::Sweep { .. } => "sweep",
        Command::Frontier { .. } => "frontier",
        Command::Verify { .. } => "verify",
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            let mut cmd = Cli::command();
            let mut sub = cmd.find_subcommand_mut(name).expect("subcommand exists").clone().bin_name(format!("sgrpo {name}"));
            sub.error(clap::error::ErrorKind::ArgumentConflict, msg).exit()
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
