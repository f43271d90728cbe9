mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stable_paths::Error;

#[derive(Parser, Debug)]
#[command(name = "stable-paths", version, about = "Extreme-path analysis for stable moving averages")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Overrides `run.seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate the configured aggregate.
    Simulate(Common),
    /// Spectral measures on the sphere and the cylinder, with the representability report.
    Spectral(Common),
    /// Tail-conditional distribution of future paths for observed windows.
    Predict {
        #[command(flatten)]
        common: Common,
        /// CSV with one observed window (m+1 values, oldest first) per row.
        #[arg(long)]
        observed: Option<PathBuf>,
    },
    /// Monte Carlo check of conditional probabilities against theory.
    Verify(Common),
    /// Spectral measure and conditional limits of the bivariate system.
    Bivariate(Common),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::NotRepresentable { .. }) => 3,
        Some(Error::TooFewExceedances { .. }) => 4,
        Some(_) => 2,
        None => 1,
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let (common, observed) = match &cli.command {
        Command::Simulate(c) | Command::Spectral(c) | Command::Verify(c) | Command::Bivariate(c) => {
            (c, None)
        }
        Command::Predict { common, observed } => (common, observed.as_deref()),
    };
    let mut cfg = config::Config::load(&common.config)?;
    if let Some(s) = common.seed {
        cfg.run.seed = s;
    }
    std::fs::create_dir_all(&common.out)?;
    let out = common.out.as_path();
    match cli.command {
        Command::Simulate(_) => commands::simulate(&cfg, out),
        Command::Spectral(_) => commands::spectral(&cfg, out),
        Command::Predict { .. } => commands::predict(&cfg, observed, out),
        Command::Verify(_) => commands::verify(&cfg, out),
        Command::Bivariate(_) => commands::bivariate(&cfg, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
