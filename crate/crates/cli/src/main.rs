//! `gmhd`: admissibility reports, kernel checks, simulations and the property
//! suite for the generalized 2D MHD laboratory.

mod commands;
mod config;
mod report;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use gmhd_core::verify::GROUPS;

use config::SymbolArgs;

pub const EXIT_OK: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_DIVERGENT: u8 = 2;
pub const EXIT_INCONCLUSIVE: u8 = 3;
pub const EXIT_UNSTABLE: u8 = 4;
pub const EXIT_USAGE: u8 = 64;
pub const EXIT_PRECONDITION: u8 = 65;
pub const EXIT_IO: u8 = 74;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
    pub usage_of: Option<&'static str>,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into(), usage_of: None }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self { code: EXIT_IO, message: message.into(), usage_of: None }
    }

    fn with_usage(mut self, sub: &'static str) -> Self {
        if self.code == EXIT_USAGE {
            self.usage_of = Some(sub);
        }
        self
    }
}

impl From<gmhd_core::Error> for CliError {
    fn from(e: gmhd_core::Error) -> Self {
        let code = match e {
            gmhd_core::Error::Io(_) => EXIT_IO,
            _ => EXIT_PRECONDITION,
        };
        Self { code, message: e.to_string(), usage_of: None }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Debug, Parser)]
#[command(name = "gmhd", version, about = "Generalized 2D MHD laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Threshold A_T, growth integral C_T and verdict for each horizon
    Admissibility(AdmissibilityArgs),
    /// Semigroup kernel estimates
    Kernel(KernelArgs),
    /// Pseudo-spectral run with energy ledger
    Simulate(SimulateArgs),
    /// Run the property suite
    Verify(VerifyArgs),
}

#[derive(Debug, clap::Args)]
pub struct AdmissibilityArgs {
    /// TOML config with [symbol] and [admissibility] sections
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub symbol: SymbolArgs,
    /// Comma-separated horizons
    #[arg(long = "T", value_delimiter = ',')]
    pub horizons: Vec<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Directory for the CSV and manifest
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Lemma {
    /// Moment-ratio scaling scan
    #[value(name = "21")]
    MomentRatio,
    /// Sobolev norm of the kernel
    #[value(name = "22")]
    HsNorm,
    /// Hessian-kernel bound ingredients
    #[value(name = "23")]
    Hessian,
    /// Time-integrated kernel identity
    #[value(name = "24")]
    TimeIntegral,
    /// Exact sup norm of the kernel
    #[value(name = "linf")]
    Linf,
}

#[derive(Debug, clap::Args)]
pub struct KernelArgs {
    #[arg(long, value_enum)]
    pub lemma: Lemma,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub symbol: SymbolArgs,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub s: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub k: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub t_min: f64,
    #[arg(long, default_value_t = 1e3)]
    pub t_max: f64,
    #[arg(long, default_value_t = 13)]
    pub t_points: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Horizon for the time-integrated identity
    #[arg(long = "T", default_value_t = 1.0)]
    pub horizon: f64,
    /// Relative lhs/rhs gap accepted by the time-integrated identity
    #[arg(long, default_value_t = 1e-3)]
    pub gap_tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct SimulateArgs {
    /// TOML config with [grid], [symbol], [time], [diagnostics], [initial]
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub symbol: SymbolArgs,
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub snapshot_in: Option<PathBuf>,
    #[arg(long)]
    pub snapshot_out: Option<PathBuf>,
    /// Ledger CSV path (default <out>/ledger.csv)
    #[arg(long)]
    pub ledger: Option<PathBuf>,
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Fixed time step; overrides the config
    #[arg(long)]
    pub dt: Option<f64>,
    /// Directory for summary.json and manifest.json
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct VerifyArgs {
    /// Run a single group of checks
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(GROUPS))]
    pub only: Option<String>,
    #[arg(long, hide = true)]
    pub inject_failure: bool,
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("GMHD_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::usage(format!("GMHD_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::usage(format!("cannot size thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    let result = init_threads().and_then(|()| match &cli.command {
        Command::Admissibility(a) => commands::admissibility(a).map_err(|e| e.with_usage("admissibility")),
        Command::Kernel(a) => commands::kernel(a).map_err(|e| e.with_usage("kernel")),
        Command::Simulate(a) => commands::simulate(a).map_err(|e| e.with_usage("simulate")),
        Command::Verify(a) => commands::verify(a),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(sub) = e.usage_of {
                let mut root = Cli::command();
                root.build();
                if let Some(cmd) = root.find_subcommand_mut(sub) {
                    eprintln!("\n{}", cmd.render_usage());
                }
            }
            ExitCode::from(e.code)
        }
    }
}
