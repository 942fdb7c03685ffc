//! `cswire`: load resource states and run correlation-space analyses.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "cswire", version, about = "Correlation-space simulation of matrix-product resource states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Source {
    /// `preset:NAME?n=..&left=..&right=..` or a path to an MPS JSON file.
    pub source: Option<String>,
    /// Path to an MPS JSON file.
    #[arg(long, conflicts_with_all = ["source", "preset"])]
    pub input: Option<PathBuf>,
    /// Preset spec, with or without the `preset:` prefix.
    #[arg(long, conflicts_with = "source")]
    pub preset: Option<String>,
    /// Numerical tolerance for validation and structural checks.
    #[arg(long, env = "CSWIRE_TOL", default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Args, Debug, Clone)]
pub struct Output {
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Text,
    Jsonl,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify the channel of the Kraus set.
    Analyze {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        output: Output,
        /// Largest depth tried by the finite-depolarizing detector.
        #[arg(long, default_value_t = 3)]
        lmax: usize,
    },
    /// Sample measurement records of a program.
    Simulate {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        output: Output,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        shots: u64,
        /// Program JSON `[{site, basis}]`; defaults to the computational basis on every site.
        #[arg(long)]
        program: Option<PathBuf>,
    },
    /// Connected two-point correlators and their bound.
    Correlate {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        output: Output,
        /// Site of the first observable.
        #[arg(long, default_value_t = 1)]
        site: usize,
        /// Largest separation; defaults to the rest of the chain, at most 10.
        #[arg(long, alias = "r-max")]
        rmax: Option<usize>,
        /// `x`, `y`, `z`, `sz` or a path to a matrix JSON file.
        #[arg(long, default_value = "x")]
        obs_a: String,
        #[arg(long, default_value = "x")]
        obs_b: String,
    },
    /// Check the equal-norm condition for faithful projective measurements.
    VerifyProjective {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        output: Output,
        /// Check one site instead of every site.
        #[arg(long)]
        site: Option<usize>,
    },
    /// Download the correlation-space state given by the left boundary.
    Download {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        output: Output,
        #[arg(long)]
        seed: u64,
        /// `identity`, `skip`, or a path to a rotation program JSON.
        #[arg(long, default_value = "identity")]
        rotation: String,
        /// Same as `--rotation skip`.
        #[arg(long, conflicts_with = "rotation")]
        skip_rotation: bool,
    },
    /// Compare transfer-formalism values with the full state vector.
    Oracle {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        output: Output,
    },
    /// List the built-in presets.
    Presets {
        #[command(flatten)]
        output: Output,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
