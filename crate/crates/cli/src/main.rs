//! `l0cert` command-line interface.

mod commands;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use l0cert::{Error, Strategy};

pub const DEFAULT_SEED: u64 = 20_240_601;

/// Few-pixel robustness certification for ReLU networks.
#[derive(Debug, Parser)]
#[command(name = "l0cert", version, about)]
pub struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-neuron intervals for every bound propagation strategy.
    Bounds(BoundsArgs),
    /// Certify one l0-ball; exit 0 verified, 1 falsified, 4 unknown.
    Verify(VerifyArgs),
    /// Closed-form hull and scaled l1-ball volumes as CSV.
    Volume(VolumeArgs),
    /// Success rate of each strategy over random perturbable sets, as CSV.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    /// Model document.
    #[arg(long)]
    pub model: PathBuf,
    /// Query document with the point, optional label and domain.
    #[arg(long)]
    pub input: PathBuf,
    /// Expected label (overrides the query document).
    #[arg(long)]
    pub label: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SeedArg {
    /// Random seed; falls back to L0CERT_SEED, then a fixed default.
    #[arg(long, env = "L0CERT_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct OutArg {
    /// Write the output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub query: QueryArgs,
    /// Ball radius.
    #[arg(short = 't', long = "radius")]
    pub t: usize,
    /// Only show these strategies.
    #[arg(long, value_delimiter = ',')]
    pub strategy: Vec<Strategy>,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub query: QueryArgs,
    #[arg(short = 't', long = "radius")]
    pub t: usize,
    #[arg(long, default_value_t = Strategy::TopT)]
    pub strategy: Strategy,
    /// Run the covering verifier over the whole ball instead of a single propagation.
    #[arg(long)]
    pub complete: bool,
    /// Corner points tried when looking for a counterexample.
    #[arg(long, default_value_t = l0cert::verifier::DEFAULT_CORNER_BUDGET)]
    pub cap_corners: usize,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct VolumeArgs {
    /// Numbers of entries, e.g. `3`, `1,2,5` or `2..=10`.
    #[arg(short = 'k', long = "entries", value_parser = parse_range)]
    pub k: Vec<Vec<usize>>,
    /// Radii; rows with `t > k` are skipped.
    #[arg(short = 't', long = "radius", value_parser = parse_range)]
    pub t: Vec<Vec<usize>>,
    /// Channels per entry.
    #[arg(long, default_value_t = 1)]
    pub channels: usize,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub lower: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub upper: f64,
    /// Append Monte Carlo estimates from this many samples.
    #[arg(long)]
    pub mc: Option<u64>,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub query: QueryArgs,
    /// Perturbable set sizes.
    #[arg(short = 'k', long = "entries", value_parser = parse_range)]
    pub k: Vec<Vec<usize>>,
    /// Radii; grid points with `t > k` are skipped.
    #[arg(short = 't', long = "radius", value_parser = parse_range)]
    pub t: Vec<Vec<usize>>,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    /// Only run these strategies.
    #[arg(long, value_delimiter = ',')]
    pub strategy: Vec<Strategy>,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub out: OutArg,
}

/// Parses `n`, `a,b,c`, `a..b` or `a..=b`.
fn parse_range(s: &str) -> Result<Vec<usize>, String> {
    let num = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("`{x}`: {e}"));
    if let Some((a, b)) = s.split_once("..=") {
        return Ok((num(a)?..=num(b)?).collect());
    }
    if let Some((a, b)) = s.split_once("..") {
        return Ok((num(a)?..num(b)?).collect());
    }
    s.split(',').map(num).collect()
}

pub fn flatten(values: &[Vec<usize>]) -> Vec<usize> {
    values.iter().flatten().copied().collect()
}

/// Process exit status for an error.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::ShapeMismatch { .. } | Error::ShapeChain { .. } => 3,
        Error::Misclassified { .. } => 5,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(&cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
