//! `gfc`: command-line front end for the gradient-flow/contact engine.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{gaussian_preset, load_config, Overrides, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "gfc",
    version,
    about = "Fokker-Planck spectral engine and contact relaxation checks"
)]
struct Cli {
    #[command(subcommand)]
    top: Top,
}

#[derive(Debug, Subcommand)]
enum Top {
    /// Run one command on a configuration.
    Run(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    /// Eigenvalues of the weighted Laplacian (spectrum.csv).
    Spectrum,
    /// Spectral and Crank-Nicolson evolution side by side (trajectory.csv).
    Evolve,
    /// Slowest-mode observables against the contact flow (contact.csv, equivalence.json).
    Contact,
    /// Tilted first gap and tilted contact dynamics (tilted.json).
    Tilted,
    /// Every checkable claim in one report (verify.json).
    Verify,
    /// Grid-refinement study (convergence.csv).
    Convergence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Preset {
    Gaussian,
}

#[derive(Debug, Args)]
struct RunArgs {
    command: Command,
    /// JSON configuration file.
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration.
    #[arg(long)]
    preset: Option<Preset>,
    /// Number of eigenpairs.
    #[arg(long, value_name = "K")]
    modes: Option<usize>,
    #[arg(long, value_name = "T")]
    t_final: Option<f64>,
    #[arg(long, value_name = "DT")]
    dt: Option<f64>,
    /// Points of the q scan, flattened; each point has one entry per observable.
    #[arg(long, value_name = "V", value_delimiter = ',', allow_hyphen_values = true)]
    q: Option<Vec<f64>>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Evaluate q scans and refinement grids concurrently.
    #[arg(long)]
    parallel: bool,
    /// Multiplies every tolerance.
    #[arg(long, value_name = "S")]
    tolerance_scale: Option<f64>,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let ov = Overrides {
            modes: self.modes,
            t_final: self.t_final,
            dt: self.dt,
            q: self.q.clone(),
            out: self.out.clone(),
            parallel: self.parallel,
            tolerance_scale: self.tolerance_scale,
        };
        match (&self.config, self.preset) {
            (Some(path), None) => load_config(path, &ov),
            (None, Some(Preset::Gaussian)) => gaussian_preset(&ov),
            _ => bail!("pass exactly one of --config PATH or --preset gaussian"),
        }
    }
}

fn dispatch(args: &RunArgs) -> Result<bool> {
    let cfg = args.config()?;
    log::debug!("configuration: {cfg:?}");
    let start = Instant::now();
    let pass = match args.command {
        Command::Spectrum => commands::spectrum::run(&cfg),
        Command::Evolve => commands::evolve::run(&cfg),
        Command::Contact => commands::contact::run(&cfg),
        Command::Tilted => commands::tilted::run(&cfg),
        Command::Verify => commands::verify::run(&cfg),
        Command::Convergence => commands::convergence::run(&cfg),
    }?;
    log::info!("{:?} finished in {:.2}s", args.command, start.elapsed().as_secs_f64());
    Ok(pass)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GFC_LOG", "warn")).init();
    let cli = Cli::parse();
    let Top::Run(args) = cli.top;
    match dispatch(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("gfc: one or more checks failed; see the report in the output directory");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("gfc: error: {e:#}");
            ExitCode::from(2)
        }
    }
}
