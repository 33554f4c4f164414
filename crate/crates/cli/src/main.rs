//! `skewid`: simulate skew-innovation AR data, identify coefficients
//! recursively, and benchmark the skew identifier against the Gaussian
//! baseline.

mod commands;
mod data;
mod manifest;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use skewid::Error as LibError;

#[derive(Parser)]
#[command(
    name = "skewid",
    version,
    about = "Recursive AR identification with skew-normal innovations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic measurement file plus a truth sidecar.
    Simulate(SimulateArgs),
    /// Run one identifier over a measurement file.
    Identify(IdentifyArgs),
    /// Monte Carlo comparison of both identifiers.
    Benchmark(BenchmarkArgs),
}

/// Options shared by every subcommand: the config file and its overrides.
#[derive(Args, Clone)]
struct CommonArgs {
    /// TOML experiment configuration; omitted fields take the built-in
    /// defaults. Command-line flags override the file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Steps per trajectory (K) override.
    #[arg(long)]
    steps: Option<usize>,
    /// Forgetting factor override.
    #[arg(long)]
    gamma: Option<f64>,
    /// VB iteration count override.
    #[arg(long = "vb-iters")]
    vb_iters: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct IdentifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Measurement CSV produced by `simulate` (or compatible).
    #[arg(long)]
    data: PathBuf,
    /// Which identifier to run.
    #[arg(long, value_parser = ["skew", "gaussian"], default_value = "skew")]
    method: String,
    /// Truth sidecar; enables the per-step error column.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Write the final posterior state snapshot here.
    #[arg(long = "dump-state")]
    dump_state: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Replication count override.
    #[arg(long)]
    replications: Option<usize>,
    /// CSV/JSON thinning override (keep every m-th step).
    #[arg(long)]
    thin: Option<usize>,
    /// Worker threads for the replication loop (0 = rayon default).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

/// Exit codes: 0 success, 2 configuration error, 3 numerical failure,
/// 4 I/O or data-format error.
fn exit_code(err: &LibError) -> u8 {
    match err {
        LibError::Validation(_) => 2,
        LibError::DegreesOfFreedom { .. }
        | LibError::Degeneracy { .. }
        | LibError::Divergence { .. } => 3,
        LibError::Data { .. } | LibError::Io(_) => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => commands::simulate(&args.common),
        Command::Identify(args) => commands::identify(
            &args.common,
            &args.data,
            &args.method,
            args.truth.as_deref(),
            args.dump_state.as_deref(),
        ),
        Command::Benchmark(args) => commands::benchmark(
            &args.common,
            args.replications,
            args.thin,
            args.threads,
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
