//! Command-line front end for the vaccine-uptake analysis pipeline.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{cluster::cmd_cluster, diagnose::cmd_diagnose, fit::cmd_fit, simulate::cmd_simulate};
use commands::{input, CmdResult};
use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "uptake",
    version,
    about = "Bayesian multilevel logistic regression and state clustering for vaccine-uptake data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Key = value configuration file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Top-level seed; all randomness derives from it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true)]
    chains: Option<usize>,

    /// Total iterations per chain (including warmup).
    #[arg(long, global = true)]
    iterations: Option<usize>,

    #[arg(long = "warmup-fraction", global = true)]
    warmup_fraction: Option<f64>,

    /// ward | complete | average
    #[arg(long, global = true)]
    linkage: Option<String>,

    /// Largest cluster count scanned by the gap statistic.
    #[arg(long = "kmax", global = true)]
    k_max: Option<usize>,

    #[arg(long = "out-dir", global = true)]
    out_dir: Option<PathBuf>,

    /// Worker threads (0 = hardware parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster states by county vaccination-rate distributions.
    Cluster {
        #[arg(long = "county-file")]
        county_file: Option<PathBuf>,
    },
    /// Fit the multilevel logistic regression to survey microdata.
    Fit {
        #[arg(long = "survey-file")]
        survey_file: Option<PathBuf>,
    },
    /// Generate a synthetic survey file from truth parameters.
    Simulate {
        /// Key = value truth file (beta, sigma_alpha, counts, ...).
        #[arg(long)]
        truth: PathBuf,
        /// Output path (default: <out-dir>/synthetic_survey.tsv).
        #[arg(long = "out-file")]
        out_file: Option<PathBuf>,
    },
    /// Recompute summaries and diagnostics from a draws file.
    Diagnose {
        #[arg(long)]
        draws: PathBuf,
    },
}

fn build_config(cli: &Cli) -> Result<RunConfig, commands::Failure> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path).map_err(input)?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(chains) = cli.chains {
        cfg.chains = chains;
    }
    if let Some(iterations) = cli.iterations {
        cfg.iterations = iterations;
    }
    if let Some(wf) = cli.warmup_fraction {
        cfg.warmup_fraction = wf;
    }
    if let Some(linkage) = &cli.linkage {
        cfg.linkage = linkage.parse().map_err(|e: String| input(anyhow::anyhow!(e)))?;
    }
    if let Some(k_max) = cli.k_max {
        cfg.k_max = k_max;
    }
    if let Some(out_dir) = &cli.out_dir {
        cfg.out_dir = out_dir.clone();
    }
    if let Some(workers) = cli.workers {
        cfg.workers = workers;
    }
    match &cli.command {
        Command::Cluster { county_file } => {
            if let Some(p) = county_file {
                cfg.county_file = Some(p.clone());
            }
        }
        Command::Fit { survey_file } => {
            if let Some(p) = survey_file {
                cfg.survey_file = Some(p.clone());
            }
        }
        Command::Simulate { .. } | Command::Diagnose { .. } => {}
    }
    Ok(cfg)
}

fn run(cli: &Cli, cfg: &RunConfig) -> CmdResult {
    match &cli.command {
        Command::Cluster { .. } => cmd_cluster(cfg),
        Command::Fit { .. } => cmd_fit(cfg),
        Command::Simulate { truth, out_file } => cmd_simulate(cfg, truth, out_file.clone()),
        Command::Diagnose { draws } => cmd_diagnose(cfg, draws),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build_config(&cli) {
        Ok(cfg) => cfg,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error());
            return ExitCode::from(failure.exit_code() as u8);
        }
    };
    if cfg.workers > 0 {
        if let Err(e) =
            rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build_global()
        {
            eprintln!("error: cannot size worker pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli, &cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error());
            ExitCode::from(failure.exit_code() as u8)
        }
    }
}
