//! `qrngstat` command-line front end.
//!
//! Exit codes: 0 when every verdict passes, 1 on a statistical failure,
//! 2 on usage, input or I/O errors.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qrngstat::TestId;
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(
    name = "qrngstat",
    version,
    about = "Randomness tests, entropy and bias-stability analytics for bit samples"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the test battery over a manifest and write report.json + results.csv
    Test(TestArgs),
    /// Write the per-sample min-entropy series as entropy_<source>.csv
    Entropy(EntropyArgs),
    /// Write the cumulative deviation series and the frequency-consistent band
    Stability(StabilityArgs),
    /// Generate sample files and manifests from an experiment plan
    Simulate(SimulateArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct TestArgs {
    /// Manifest JSON describing one source's sample files
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Per-sample significance level
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    /// Width of the pass-proportion band in standard deviations
    #[arg(long, default_value_t = 3.0)]
    pub band_coefficient: f64,
    /// Comma-separated test ids (default: all eight)
    #[arg(long, value_delimiter = ',')]
    pub tests: Option<Vec<TestId>>,
    /// Block length for the block-frequency test
    #[arg(long, default_value_t = 128)]
    pub block_size: usize,
    /// Pattern length for approximate entropy
    #[arg(long, default_value_t = 2)]
    pub apen_m: usize,
    /// Allow sequences shorter than each test's recommended minimum
    #[arg(long)]
    pub no_min_length_enforcement: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct EntropyArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct StabilityArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Significance level for the proportion band
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    /// Bits between deviation points
    #[arg(long, default_value_t = 8192)]
    pub stride: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct SimulateArgs {
    /// Experiment plan JSON
    #[arg(long)]
    pub plan: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Override the plan's master seed
    #[arg(long)]
    pub seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Test(args) => commands::test(args),
        Command::Entropy(args) => commands::entropy(args),
        Command::Stability(args) => commands::stability(args),
        Command::Simulate(args) => commands::simulate(args),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
