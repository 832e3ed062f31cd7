use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use selfmetro::cli::{self, RunOptions, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "selfmetro",
    version,
    about = "Double-well boson interferometry: self-consistent dynamics, Fisher information, and tilt estimation"
)]
struct Cli {
    /// TOML configuration file; defaults reproduce the paper regime.
    #[arg(short, long)]
    config: Option<PathBuf>,

    /// Override the configured output directory.
    #[arg(short, long)]
    output_dir: Option<PathBuf>,

    /// Freeze the orbitals (conventional two-mode interferometry mode).
    #[arg(long)]
    frozen_orbitals: bool,

    /// Emit SVG charts next to the CSVs.
    #[arg(long)]
    plots: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write trap, spectrum, and localized-orbital files.
    Prepare,
    /// Evolve both probe states at gN = 0.1 and gN = 1 and log the
    /// two-mode monitors.
    Evolve,
    /// Quantum/classical Fisher information sweeps over time and particle
    /// number.
    Fisher,
    /// Build the likelihood family over the tilt grid.
    Family,
    /// Family plus maximum-likelihood estimator statistics.
    Estimate,
    /// Everything above in sequence.
    All,
}

fn run() -> selfmetro::Result<()> {
    let args = Cli::parse();
    let mut cfg = match &args.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(dir) = &args.output_dir {
        cfg.output_dir = dir.display().to_string();
    }
    if args.frozen_orbitals {
        cfg.evolution.frozen_orbitals = true;
    }
    let opts = RunOptions { plots: args.plots };
    let paths = match args.command {
        Command::Prepare => cli::run_prepare(&cfg, opts)?,
        Command::Evolve => cli::run_evolve(&cfg, opts)?,
        Command::Fisher => cli::run_fisher(&cfg, opts)?,
        Command::Family => cli::run_family(&cfg, opts)?.1,
        Command::Estimate => cli::run_estimate(&cfg, opts)?,
        Command::All => cli::run_all(&cfg, opts)?,
    };
    for path in paths {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Ok(threads) = std::env::var("SELFMETRO_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: SELFMETRO_THREADS must be a positive integer");
                return ExitCode::from(2);
            }
        }
    }
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
