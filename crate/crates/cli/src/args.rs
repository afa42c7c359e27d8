//! Command-line flags. Every value flag is optional here so that a config
//! file can supply it; the merged result is checked in `params`.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use infotarget::FitMode;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "infotarget", version, about = "Assemble and count fixed-form tests against an information target")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic 3PL item bank.
    GenBank(GenBankArgs),
    /// Estimate class ratios over a range of test lengths.
    Sweep(SweepArgs),
    /// Search for a target-exceeding test by annealing.
    Assemble(AssembleArgs),
    /// Turn a sweep into log10 class counts.
    Counts(CountsArgs),
    /// Count every test of one length exactly (small banks only).
    Enumerate(EnumerateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GenBank(_) => "gen-bank",
            Command::Sweep(_) => "sweep",
            Command::Assemble(_) => "assemble",
            Command::Counts(_) => "counts",
            Command::Enumerate(_) => "enumerate",
        }
    }
}

/// Target, grid and tolerance flags shared by the commands that score tests.
#[derive(Debug, Args, Serialize)]
pub struct ScoringArgs {
    /// Item bank CSV.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bank: Option<PathBuf>,

    /// Number of ability grid points on [-3, 3].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,

    /// L2 tolerance for absolute and relative meeting.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,

    /// `lsat` or polynomial coefficients, highest degree first.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct OutputArgs {
    /// JSON config or manifest; explicit flags take precedence over it.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    #[arg(short, long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct GenBankArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_max: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_max: Option<f64>,
    /// Guessing parameter shared by every item.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub scoring: ScoringArgs,
    /// Comma-separated subset of absolute,relative,exceeding.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<FitMode>>,
    /// Draws per test length for every mode.
    #[arg(long = "K")]
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,
    #[arg(long = "K-meeting")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_meeting: Option<u64>,
    #[arg(long = "K-exceeding")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_exceeding: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_from: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_to: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_step: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct AssembleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub scoring: ScoringArgs,
    /// Test length.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long = "T0")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iters_per_temp: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_proposals: Option<u64>,
    /// Start from the most informative items instead of a random test.
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub greedy_init: bool,
    /// Energy trace CSV.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_every: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct CountsArgs {
    /// Sweep CSV produced by `sweep`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<PathBuf>,
    /// Test length whose estimate anchors the counts; defaults to the
    /// length with the largest ratio, per mode.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub anchor_n: Option<usize>,
    /// Bank size; read from `--bank` when omitted.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bank: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<FitMode>>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct EnumerateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub scoring: ScoringArgs,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}
