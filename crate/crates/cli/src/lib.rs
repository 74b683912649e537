//! `tmsv` command-line tool.
//!
//! Every command writes its files into `--out-dir` and prints the report to
//! standard output. Exit codes: 0 success, 2 input error, 3 numeric failure.

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

mod commands;
pub mod io;
mod plots;
pub mod report;

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
/// Seed used when `--seed` is absent.
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<tmsv::Error> for CliError {
    fn from(e: tmsv::Error) -> Self {
        use tmsv::Error as E;
        match e {
            E::Domain(_) | E::Input(_) | E::GridMismatch { .. } | E::OracleCap(_) => {
                CliError::Input(e.to_string())
            }
            E::Truncation { .. } | E::UndefinedWitness(_) | E::Numeric(_) => {
                CliError::Numeric(e.to_string())
            }
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "tmsv", version, about = "Photon-subtracted two-mode squeezed vacuum toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Worker threads for Monte Carlo, bootstrap and trace filtering.
    /// Results do not depend on this value.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Predict the detected joint click distribution and its witnesses.
    Predict(PredictArgs),
    /// Simulate the heralded subtraction protocol.
    Mc(McArgs),
    /// Maximum-likelihood fit of z, eta and nu to a count matrix.
    Fit(FitArgs),
    /// Turn detector traces into a photon-number distribution.
    Tes(TesArgs),
    /// Witness report for a joint distribution read from CSV.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Also write gnuplot data and script files.
    #[arg(long)]
    pub emit_plots: bool,
    /// Record the wall-clock time in the report (breaks byte-identical output).
    #[arg(long)]
    pub stamp: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SqueezingArgs {
    /// Squeezing parameter z = tanh(r).
    #[arg(long, conflicts_with = "pump", required_unless_present = "pump")]
    pub z: Option<f64>,
    /// Pump parameters `chi_eff,omega_p,length,intensity,n0` (SI units).
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub pump: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args)]
pub struct DetectorArgs {
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub nu: f64,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub squeezing: SqueezingArgs,
    #[arg(long, default_value_t = 0, conflicts_with = "l")]
    pub l1: usize,
    #[arg(long, default_value_t = 0, conflicts_with = "l")]
    pub l2: usize,
    /// Symmetric subtraction numbers; several values run a batch, one
    /// subdirectory `l<value>` each.
    #[arg(long, value_delimiter = ',')]
    pub l: Option<Vec<usize>>,
    #[command(flatten)]
    pub detector: DetectorArgs,
    /// Fixed grid size; by default the grid grows until `--tail-tol` is met.
    #[arg(long)]
    pub nmax: Option<usize>,
    #[arg(long, default_value_t = 1e-9)]
    pub tail_tol: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct McArgs {
    #[arg(long)]
    pub z: f64,
    #[arg(long, default_value_t = 0)]
    pub l1: usize,
    #[arg(long, default_value_t = 0)]
    pub l2: usize,
    /// Main detector efficiency.
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    /// Main detector dark counts per pulse.
    #[arg(long, default_value_t = 0.0)]
    pub nu: f64,
    /// Tap coupler transmission.
    #[arg(long, default_value_t = 0.9)]
    pub tap_t: f64,
    /// Tap detector efficiency (defaults to `--eta`).
    #[arg(long)]
    pub tap_eta: Option<f64>,
    /// Tap detector dark counts (defaults to `--nu`).
    #[arg(long)]
    pub tap_nu: Option<f64>,
    /// Pump pulses, or accepted events with `--heralded`.
    #[arg(long, default_value_t = 100_000)]
    pub shots: u64,
    /// Draw accepted events directly from the conditional law.
    #[arg(long)]
    pub heralded: bool,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    pub tail_tol: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Count matrix CSV.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub l1: usize,
    #[arg(long, default_value_t = 0)]
    pub l2: usize,
    /// Bootstrap resamples (0 disables, otherwise at least 10).
    #[arg(long, default_value_t = 0)]
    pub bootstrap: usize,
    /// Separate efficiency and dark counts for signal and idler.
    #[arg(long)]
    pub per_mode: bool,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TesArgs {
    /// Trace CSV, one pulse per line.
    #[arg(long = "in", required_unless_present = "synth")]
    pub input: Option<PathBuf>,
    /// Write this many synthetic traces instead of analysing a file.
    #[arg(long, conflicts_with = "input")]
    pub synth: Option<usize>,
    /// Photon-number pmf for `--synth`, comma separated from n = 0.
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.25,0.2,0.15,0.1,0.05")]
    pub pmf: Vec<f64>,
    /// Projected energy per photon for `--synth`.
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    /// Per-sample white noise for `--synth`.
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    /// Samples per record of the built-in template.
    #[arg(long, default_value_t = 64)]
    pub samples: usize,
    /// Highest photon number in the mixture fit.
    #[arg(long, default_value_t = 8)]
    pub kmax: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Joint distribution CSV.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// Runs a parsed command on a pool of `cli.workers` threads.
pub fn run(cli: Cli) -> Result<String, CliError> {
    if cli.workers == 0 {
        return Err(CliError::Input("--workers must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers)
        .build()
        .map_err(|e| CliError::Numeric(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Predict(a) => commands::predict(a),
        Command::Mc(a) => commands::mc(a),
        Command::Fit(a) => commands::fit(a),
        Command::Tes(a) => commands::tes(a),
        Command::Report(a) => commands::report(a),
    })
}

/// Parses `args`, runs, prints, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("tmsv: {e}");
            e.exit_code()
        }
    }
}
