//! `qnn`: experiment harness for quadratic networks.
//!
//! Every subcommand writes its artifacts to a fresh timestamped directory
//! under `--out-dir` (or `$QNN_OUT_DIR`) and prints a JSON run report.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "qnn", version, about = "Quadratic network experiments")]
pub struct Cli {
    /// Parent directory for run directories.
    #[arg(long, env = "QNN_OUT_DIR", default_value = "qnn-runs", global = true)]
    pub out_dir: PathBuf,

    /// Base seed for data generation and initialization.
    #[arg(long, default_value_t = 0, global = true)]
    pub seed: u64,

    /// Also emit SVG plots.
    #[arg(long, global = true)]
    pub svg: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Two concentric rings: one quadratic neuron vs conventional hidden layers.
    Rings(commands::RingsArgs),
    /// Three-module deep radial network on the cosine profile.
    RadialDeep(commands::RadialDeepArgs),
    /// Factorize a polynomial and build its exact product-tree network.
    Poly(commands::PolyArgs),
    /// Train the shortcut factorization network on the quintic target.
    FactorTrain(commands::FactorTrainArgs),
    /// Bernstein approximants: sup error sweep and exact networks.
    Bernstein(commands::BernsteinArgs),
    /// Quadratic vs conventional hidden layers on a radial indicator target.
    WidthSweep(commands::WidthSweepArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
