//! `delaylattice` command-line experiments.
//!
//! Every command writes into `--out`: its data files, `resolved.json` with the
//! fully defaulted inputs, and `manifest.json` listing inputs and outputs with
//! SHA-256 hashes. Exit status is 0 on success, 1 for configuration or input
//! errors and 2 when a numerical routine fails.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::output::Failure;

/// Number of worker threads for per-mode and per-wave scans.
pub const THREADS_ENV: &str = "DELAYLATTICE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "delaylattice", version, about = "Delay-coupled oscillator lattices: spectra, plane waves, simulation, patterns")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Eigenvalues of the homogeneous steady state for every lattice mode.
    SpectrumStst(commands::SpectrumArgs),
    /// Large-delay dispersion curves and surfaces.
    Dispersion(commands::DispersionArgs),
    /// Stuart-Landau plane waves of the lattice.
    Planewaves(commands::PlanewaveArgs),
    /// Exact Floquet spectra and stability verdicts of plane waves.
    Floquet(commands::FloquetArgs),
    /// Hopf thresholds and points of the steady state.
    Hopf(commands::HopfArgs),
    /// Integrate the lattice.
    Simulate(commands::SimulateArgs),
    /// Turn a PGM image into a shift field and the corresponding delays.
    Encode(commands::EncodeArgs),
    /// Compare measured spike offsets with an encoded shift field.
    Verify(commands::VerifyArgs),
}

/// Options shared by commands that read a run configuration.
#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Override the Stuart-Landau `alpha`.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// Override the FitzHugh-Nagumo current `I`.
    #[arg(long, allow_hyphen_values = true)]
    pub current: Option<f64>,
    /// Override the coupling strength `C`.
    #[arg(long, allow_hyphen_values = true)]
    pub coupling: Option<f64>,
    /// Override the homogeneous delay.
    #[arg(long, allow_hyphen_values = true)]
    pub tau: Option<f64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(f) = init_threads() {
        eprintln!("error: {f}");
        return f.exit_code();
    }
    let result = match cli.command {
        Command::SpectrumStst(a) => commands::spectrum_stst(a),
        Command::Dispersion(a) => commands::dispersion(a),
        Command::Planewaves(a) => commands::planewaves(a),
        Command::Floquet(a) => commands::floquet(a),
        Command::Hopf(a) => commands::hopf(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Encode(a) => commands::encode(a),
        Command::Verify(a) => commands::verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}

fn init_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| Failure::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Config(e.to_string()))
}
