//! Command-line front end: projection inspection, gradient checks, training,
//! evaluation, experiment tables and calibration probes.

pub mod commands;
pub mod format;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "PROJLOSS_THREADS";

const METRIC_HELP: &str = "Metrics: ranking Hamming = 100 × mean fraction of items whose predicted rank \
differs from the truth; ordinal MAE = mean |ŷ − y|; multilabel accuracy = 100 × mean per-label agreement; \
multilabel F1 = example-based F1 × 100 averaged over samples, where an empty prediction for an empty truth \
scores 100 and exactly one empty side scores 0.";

#[derive(Debug, Parser)]
#[command(name = "projloss", version, about = "Projection-based losses for structured prediction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Project a score vector or matrix onto a set and print μ.
    Project(ProjectArgs),
    /// Compare loss gradients with central finite differences.
    Gradcheck(GradcheckArgs),
    /// Train a linear model with λ chosen on a validation split.
    #[command(after_help = METRIC_HELP)]
    Train(TrainArgs),
    /// Evaluate a saved model on a dataset.
    #[command(after_help = METRIC_HELP)]
    Eval(EvalArgs),
    /// Run a grid of pipelines on one dataset and print a results table.
    #[command(after_help = METRIC_HELP)]
    Experiment(ExperimentArgs),
    /// Sample calibration probes and report violations.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    /// Set identifier: simplex, cube, knapsack:L:U, birkhoff, rowstochastic,
    /// permutahedron[:w1,…], ordersimplex, full.
    #[arg(long)]
    pub set: String,
    #[arg(long, default_value = "euclidean")]
    pub geometry: String,
    /// Entries separated by spaces or commas; matrix rows separated by ';'.
    #[arg(long, allow_hyphen_values = true)]
    pub input: String,
    /// Print a JSON object instead of plain text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long)]
    pub set: String,
    /// Size parameter: items for vector sets, side for matrix sets, levels for
    /// the order simplex.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value = "euclidean")]
    pub geometry: String,
    #[arg(long, default_value_t = 20)]
    pub points: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Perturb the analytic gradient; the check is then expected to fail.
    #[arg(long)]
    pub corrupt_gradient: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset file, or synthetic:ordinal / synthetic:separable.
    #[arg(long)]
    pub data: String,
    /// Optional test file; when given, only train/validation are split off `--data`.
    #[arg(long)]
    pub test_data: Option<PathBuf>,
    /// multiclass, multilabel, ranking or ordinal.
    #[arg(long)]
    pub task: String,
    /// Number of classes, labels, items or levels (inferred for ordinal and
    /// multiclass CSV files when omitted).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub projection: String,
    #[arg(long)]
    pub decoding: String,
    #[arg(long, default_value = "euclidean")]
    pub geometry: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated λ values (default: ten log-spaced values in [1e-4, 1e4]).
    #[arg(long)]
    pub lambdas: Option<String>,
    /// Where to write the trained model.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Where to write the JSON report (stdout otherwise).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Include wall-clock timing in the report (makes it run-dependent).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// JSON experiment configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Replace the dataset named in the configuration.
    #[arg(long)]
    pub dataset: Option<String>,
    /// Where to write the JSON report (overrides the configuration).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] projloss::Error),
    /// A check ran and failed; its report has already been printed.
    #[error("{0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::CheckFailed(_) => 1,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Caps the global worker pool from the environment. Later calls are no-ops.
pub fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return 2;
            }
            let _ = write!(out, "{e}");
            return 0;
        }
    };
    configure_threads();
    match commands::dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
