//! `chanlab`: Monte Carlo experiments, exact moments and limit predictions
//! for products of random quantum channels.

mod commands;
mod render;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use chanlab::channels::{OutputSide, Pairing};
use chanlab::Exec;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "chanlab",
    version,
    about = "Random quantum channel products: sampling, exact moments, limits"
)]
struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; output does not depend on this.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact Weingarten table of S_p at dimension n.
    Wg {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        p: usize,
    },
    /// Per-trial output spectra.
    Simulate(SimulateArgs),
    /// Exact moments against Monte Carlo and the limit.
    Moments(MomentsArgs),
    /// Mean spectra along increasing n.
    Convergence(ConvergenceArgs),
    /// Bell-state overlap of the conjugate product against d_in / (n k).
    Hw(HwArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PairingArg {
    Conjugate,
    Identical,
    Star,
    Transpose,
}

impl From<PairingArg> for Pairing {
    fn from(p: PairingArg) -> Self {
        match p {
            PairingArg::Conjugate => Pairing::Conjugate,
            PairingArg::Identical => Pairing::Identical,
            PairingArg::Star => Pairing::Star,
            PairingArg::Transpose => Pairing::Transpose,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputArg {
    Bell,
    Dephased,
    Product,
    Lowrank,
    Mixed,
    Generalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    Complementary,
    Direct,
}

impl From<SideArg> for OutputSide {
    fn from(s: SideArg) -> Self {
        match s {
            SideArg::Complementary => OutputSide::Complementary,
            SideArg::Direct => OutputSide::Direct,
        }
    }
}

/// Input state selection shared by the sampling commands.
#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    #[arg(long, value_enum, default_value = "bell")]
    pub input: InputArg,
    /// Rank of the low-rank input (default: ceil(sqrt(n))).
    #[arg(long)]
    pub rank: Option<usize>,
    /// Mixing dimension of the mixed input.
    #[arg(long, default_value_t = 2)]
    pub l: usize,
    /// Overlap |Tr A| / sqrt(d) of the generalized input.
    #[arg(long)]
    pub m_abs: Option<f64>,
    #[arg(long, value_enum, default_value = "complementary")]
    pub side: SideArg,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "conjugate")]
    pub pairing: PairingArg,
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Input dimension (default: n).
    #[arg(long)]
    pub din: Option<usize>,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Conjugate,
    Identical,
    MixedDirect,
    MixedComplementary,
}

#[derive(Debug, Clone, Args)]
pub struct MomentsArgs {
    #[arg(long, value_enum, default_value = "conjugate")]
    pub model: ModelArg,
    /// Comma-separated output dimensions.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Input dimension as a multiple of n, given at the first n (default: n).
    #[arg(long)]
    pub din: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub l: usize,
    #[arg(long, default_value_t = 2)]
    pub p: usize,
    /// Overlap of a generalized Bell input (default: the Bell state).
    #[arg(long)]
    pub m_abs: Option<f64>,
    /// Monte Carlo trials per n; 0 skips sampling.
    #[arg(long, default_value_t = 2000)]
    pub trials: usize,
    /// Permit p = 4 (a sum over 1.6e9 pairs).
    #[arg(long)]
    pub allow_order_four: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ConvergenceArgs {
    #[arg(long, value_enum, default_value = "conjugate")]
    pub pairing: PairingArg,
    #[command(flatten)]
    pub input: InputArgs,
    /// Comma-separated, ascending output dimensions.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// d_in / (n k); default 1/k.
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
}

#[derive(Debug, Clone, Args)]
pub struct HwArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Input dimension (default: n).
    #[arg(long)]
    pub din: Option<usize>,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
}

/// Rendered output and the verdict of its internal validation checks.
pub struct Report {
    pub body: String,
    pub ok: bool,
}

fn run(cli: &Cli, exec: Exec) -> Result<Report> {
    let seed = cli.seed;
    match &cli.command {
        Command::Wg { n, p } => commands::wg(*n, *p, cli.format.unwrap_or(Format::Json)),
        Command::Simulate(a) => {
            commands::simulate(a, seed, exec, cli.format.unwrap_or(Format::Csv))
        }
        Command::Moments(a) => commands::moments(a, seed, exec, cli.format.unwrap_or(Format::Json)),
        Command::Convergence(a) => {
            commands::convergence(a, seed, exec, cli.format.unwrap_or(Format::Csv))
        }
        Command::Hw(a) => commands::hw(a, seed, exec, cli.format.unwrap_or(Format::Json)),
    }
}

fn execute(cli: &Cli) -> Result<Report> {
    match cli.jobs {
        Some(0) => anyhow::bail!("--jobs must be positive"),
        Some(1) => run(cli, Exec::Sequential),
        Some(jobs) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .context("building thread pool")?;
            pool.install(|| run(cli, Exec::Parallel))
        }
        None => run(cli, Exec::default()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let report = match execute(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let written = match &cli.out {
        Some(path) => {
            fs::write(path, &report.body).with_context(|| format!("writing {}", path.display()))
        }
        None => std::io::stdout()
            .write_all(report.body.as_bytes())
            .context("writing stdout"),
    };
    if let Err(e) = written {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    if report.ok {
        ExitCode::SUCCESS
    } else {
        eprintln!("validation failed");
        ExitCode::FAILURE
    }
}
