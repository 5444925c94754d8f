use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use corridor_tilt::commands::{self, termination_label, GRADCHECK_TOLERANCE};
use corridor_tilt::{case_study_preset, serialize_config};
use corridor_tilt_core::Termination;

/// Joint vertical-tilt and cell-partition optimization for ground users and
/// UAV corridors.
///
/// Exit status: 0 on success, 1 on error, 2 when the optimizer stopped on its
/// iteration cap or the gradient check exceeded its tolerance.
#[derive(Parser)]
#[command(name = "corridor-tilt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize the tilts and write tilts, partition, CDF and convergence tables.
    Optimize {
        #[command(flatten)]
        common: Common,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate fixed tilts without optimizing.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// CSV with `station_id` and `tilt_deg` columns, e.g. a previous `tilts.csv`.
        #[arg(long)]
        tilts: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare the analytic gradient with central differences at random tilts.
    Gradcheck {
        #[command(flatten)]
        common: Common,
        /// Finite-difference step, degrees.
        #[arg(long, default_value_t = 1e-4)]
        step: f64,
        #[arg(long, default_value_t = 10)]
        trials: usize,
    },
    /// Print the case-study configuration.
    Preset,
}

#[derive(Args)]
struct Common {
    /// Scenario configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Dotted-path override applied before validation, e.g. `alpha=0`. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads; defaults to all cores. Results do not depend on it.
    #[arg(long, env = "CORRIDOR_TILT_THREADS")]
    threads: Option<usize>,
    /// Seed of the random initial partition and gradcheck tilts; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn setup(&self) -> Result<corridor_tilt::ScenarioConfig> {
        if let Some(n) = self.threads {
            anyhow::ensure!(n > 0, "--threads must be at least 1");
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .context("starting thread pool")?;
        }
        commands::load_config(&self.config, &self.overrides, self.seed)
    }
}

fn print_opt(name: &str, v: Option<f64>) {
    match v {
        Some(v) => println!("{name} = {v}"),
        None => println!("{name} = n/a"),
    }
}

fn print_evaluation(e: &commands::Evaluation) {
    println!("phi_dbm = {}", e.phi_dbm);
    print_opt("mean_rss_ground_dbm", e.mean_ground_dbm);
    print_opt("mean_rss_uav_dbm", e.mean_uav_dbm);
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Optimize { common, out } => {
            let config = common.setup()?;
            let report = commands::optimize(&config, &out)?;
            print_evaluation(&report.evaluation);
            println!("termination = {}", termination_label(report.termination));
            println!("outer_iterations = {}", report.outer_iterations);
            println!("inner_iterations = {}", report.inner_iterations);
            Ok(match report.termination {
                Termination::Threshold => ExitCode::SUCCESS,
                Termination::Cap => ExitCode::from(2),
            })
        }
        Command::Evaluate { common, tilts, out } => {
            let config = common.setup()?;
            print_evaluation(&commands::evaluate(&config, &tilts, &out)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Gradcheck {
            common,
            step,
            trials,
        } => {
            let config = common.setup()?;
            let errors = commands::gradcheck(&config, step, trials)?;
            for (i, e) in errors.iter().enumerate() {
                println!("trial {} max_rel_error = {e:e}", i + 1);
            }
            let worst = errors.iter().copied().fold(0.0, f64::max);
            println!("max_rel_error = {worst:e}");
            Ok(if worst < GRADCHECK_TOLERANCE {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        Command::Preset => {
            print!("{}", serialize_config(&case_study_preset()));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
