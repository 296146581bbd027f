//! Batch entry point for the emulator pipelines: Hubbard sweeps and
//! quenches, the variational chemistry loop, geometry embedding,
//! measurement planning, the standalone Ising CMFT study and the
//! exact-diagonalization oracle. Every command writes seeded,
//! byte-reproducible CSV/JSON artifacts.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "rydsim", version, about = "Rydberg-array emulator pipelines")]
pub struct Cli {
    /// TOML run configuration
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// random seed override
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// parallel sweep-point workers
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    /// output directory
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// spin-solver backend
    #[arg(long, global = true, value_parser = ["exact", "anneal"])]
    pub backend: Option<String>,
    /// noise toggle for the anneal backend
    #[arg(long, global = true, value_parser = ["on", "off"])]
    pub noise: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Equilibrium Mott sweep over the interaction grid
    HubbardSweep,
    /// Interaction quench and its spectrum
    HubbardQuench,
    /// Variational chemistry loop on a coefficient file
    Vqe,
    /// Optimize a register for a Hamiltonian's interaction targets
    Embed,
    /// Emit a derandomized measurement plan
    DerandPlan,
    /// Standalone 3x3 transverse-Ising CMFT study
    IsingCmft,
    /// Exact diagonalization of a coefficient file
    OracleEd,
}

/// Process failures map to exit codes: 2 config error, 3 guard violation,
/// 4 non-convergence (artifacts are still written).
pub enum Failure {
    Config(String),
    Guard(String),
    NonConverged(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Guard(_) => 3,
            Failure::NonConverged(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Guard(m) | Failure::NonConverged(m) => m,
        }
    }
}

impl From<rydsim_core::Error> for Failure {
    fn from(e: rydsim_core::Error) -> Self {
        use rydsim_core::Error::*;
        match e {
            GuardExceeded(_) | NormDrift { .. } | PositivityViolation { .. } => {
                Failure::Guard(e.to_string())
            }
            NonConverged(_) => Failure::NonConverged(e.to_string()),
            other => Failure::Config(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
