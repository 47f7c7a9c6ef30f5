//! `tsdict run` fits a classifier over a range of resamples and writes one
//! results file per resample; `tsdict compare` summarises a results tree.

mod compare;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "tsdict", version, about = "Dictionary-based time series classification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit and evaluate one classifier on one dataset over a resample range.
    Run(RunArgs),
    /// Rank classifiers and test pairwise differences from saved results.
    Compare(CompareArgs),
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// boss, cboss, sboss or weasel.
    #[arg(long)]
    pub classifier: String,
    /// A directory holding NAME_TRAIN and NAME_TEST files, a *_TRAIN file,
    /// or a `.sim` simulator config.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, env = "TSDICT_RESULTS", default_value = "results")]
    pub results: PathBuf,
    /// Half-open range `A..B`, or a single id.
    #[arg(long, default_value = "0..1")]
    pub resamples: String,
    /// Training budget per resample (cboss only).
    #[arg(long)]
    pub contract_seconds: Option<f64>,
    /// Directory for per-resample checkpoints (cboss only).
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Measure peak heap during each fit; resamples then run one at a time.
    #[arg(long)]
    pub instrument: bool,
    /// Recompute resamples that already have results.
    #[arg(long)]
    pub force: bool,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[arg(long, env = "TSDICT_RESULTS", default_value = "results")]
    pub results: PathBuf,
    /// Comma-separated classifier names; defaults to every directory found.
    #[arg(long, value_delimiter = ',')]
    pub classifier: Vec<String>,
    /// Comma-separated dataset names; defaults to every dataset found.
    #[arg(long, value_delimiter = ',')]
    pub datasets: Vec<String>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Where the report files go; defaults to `<results>/comparison`.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Failures the caller should see as bad invocations (exit code 2).
pub struct UsageError(pub String);

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run::run(&args),
        Command::Compare(args) => compare::compare(&args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(UsageError(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
