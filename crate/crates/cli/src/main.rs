use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

/// Analysis, synthesis and verification of cache- and cloud-aided F-RAN
/// delivery schemes.
#[derive(Debug, Parser)]
#[command(name = "fran", version)]
struct Cli {
    /// Evaluate sweeps, scans and verification on one thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Achievable NDT, lower bound, exactness and gap of one configuration.
    Analyze(AnalyzeArgs),
    /// CSV of both bounds over a grid of mu and r.
    Sweep(SweepArgs),
    /// Emit the placement, fronthaul and delivery schedule as JSON.
    Synthesize(SynthesizeArgs),
    /// Validate a scheme document and zero-force it on random channels.
    Verify(VerifyArgs),
    /// Compare the LP lower bound with the closed-form bounds (CSV).
    Oracle(OracleArgs),
    /// Scan a parameter grid for gap and consistency violations.
    Gap(GapArgs),
}

#[derive(Debug, Clone, Default, Args)]
struct SystemArgs {
    /// JSON file with the same keys as the flags (`n_files`, `mu_list`, ..).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of edge nodes.
    #[arg(long)]
    kt: Option<u32>,
    /// Number of users.
    #[arg(long)]
    kr: Option<u32>,
    /// Antennas per edge node.
    #[arg(long)]
    nt: Option<u32>,
    /// Library size (defaults to the number of users).
    #[arg(long)]
    n_files: Option<u32>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Fractional cache size, e.g. `0.25` or `1/4`.
    #[arg(long)]
    mu: Option<String>,
    /// Fronthaul-to-edge capacity ratio.
    #[arg(long)]
    r: Option<String>,
    /// serial, pipelined or both.
    #[arg(long)]
    mode: Option<String>,
    /// json or text.
    #[arg(long)]
    format: Option<String>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Comma-separated cache sizes.
    #[arg(long, conflicts_with = "mu_steps")]
    mu_list: Option<String>,
    /// Grid points per unit of mu*k_t (default 4).
    #[arg(long)]
    mu_steps: Option<u32>,
    /// Comma-separated fronthaul ratios.
    #[arg(long)]
    r_list: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthesizeArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// One of the four worked examples (k_t = 4, n_t = 2).
    #[arg(long, conflicts_with_all = ["kt", "kr", "nt", "n_files", "mu", "r", "m"])]
    example: Option<u8>,
    #[arg(long)]
    mu: Option<String>,
    #[arg(long)]
    r: Option<String>,
    /// Multiplicity (defaults to the serial scheme's choice).
    #[arg(long)]
    m: Option<u32>,
    /// Comma-separated requested file per user (defaults to 1..k_r).
    #[arg(long)]
    demand: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scheme document written by `synthesize`.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Number of channel realizations (default 100).
    #[arg(long)]
    seeds: Option<u64>,
    /// First seed (default 0).
    #[arg(long)]
    seed_start: Option<u64>,
    /// Comma-separated SNRs in dB for the finite-SNR latency sweep.
    #[arg(long, requires = "snr_out")]
    snr_db: Option<String>,
    /// CSV destination of the finite-SNR sweep.
    #[arg(long)]
    snr_out: Option<PathBuf>,
    /// Also report block-Markov latency with this many stages.
    #[arg(long)]
    block_markov: Option<u32>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, conflicts_with = "mu_list")]
    mu: Option<String>,
    #[arg(long, conflicts_with = "r_list")]
    r: Option<String>,
    #[arg(long)]
    mu_list: Option<String>,
    #[arg(long)]
    r_list: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GapArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated values; each defaults to the standard scan grid.
    #[arg(long)]
    kt_list: Option<String>,
    #[arg(long)]
    kr_list: Option<String>,
    #[arg(long)]
    nt_list: Option<String>,
    #[arg(long)]
    r_list: Option<String>,
    #[arg(long)]
    mu_steps: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failures with a dedicated exit code.
#[derive(Debug)]
enum Failure {
    Infeasible(String),
    Validation(String),
    Gap(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Infeasible(m) => write!(f, "infeasible configuration: {m}"),
            Failure::Validation(m) => write!(f, "validation failed: {m}"),
            Failure::Gap(m) => write!(f, "gap violation: {m}"),
        }
    }
}

impl std::error::Error for Failure {}

fn exit_code(e: &anyhow::Error) -> u8 {
    use fran_core::Error as E;
    for cause in e.chain() {
        if let Some(f) = cause.downcast_ref::<Failure>() {
            return match f {
                Failure::Infeasible(_) => 2,
                Failure::Validation(_) => 3,
                Failure::Gap(_) => 4,
            };
        }
        if let Some(err) = cause.downcast_ref::<E>() {
            return match err {
                E::Infeasible(_) | E::InvalidConfig(_) | E::MultiplicityTooLarge { .. } | E::ZeroMultiplicity => 2,
                E::Document(_) | E::InvalidDemand(_) => 3,
                _ => 1,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    // usage errors exit with 1 so that 2 keeps meaning "infeasible"
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
