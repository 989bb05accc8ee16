//! Command-line surface. Every flag is optional so that a JSON config file
//! can supply it instead; the flag structs serialize to the same keys as the
//! resolved configurations in [`crate::config`].

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::ExperimentKind;

const SOLVERS: [&str; 4] = ["sgcl", "sbhcl", "scl", "mtl"];
const STOPPING: [&str; 2] = ["relative", "inverse_norm"];
const SNR_DEFINITIONS: [&str; 2] = ["signal_over_noise", "total_over_signal"];

#[derive(Debug, Parser)]
#[command(
    name = "concomitant",
    version,
    about = "Sparse multi-task regression with joint heteroscedastic noise estimation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a synthetic dataset and write X.csv, Y.csv, B_star.csv and meta.json.
    Simulate(SimulateArgs),
    /// Fit one solver at one regularization level and write fit.json.
    Fit(FitArgs),
    /// Fit a warm-started path of decreasing levels and write path.csv.
    Path(PathArgs),
    /// Run one of the benchmark protocols over several seeds.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct Common {
    /// JSON file of parameters; flags given on the command line win.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SolverFlags {
    /// Relative duality-gap tolerance [default: 1e-6].
    #[arg(long)]
    pub tol: Option<f64>,
    /// Epochs between noise refreshes and gap checks [default: 10].
    #[arg(long)]
    pub f: Option<usize>,
    /// Epoch budget per fit [default: 10000].
    #[arg(long)]
    pub max_epochs: Option<usize>,
    /// Noise floor at 10^-alpha times the naive noise level [default: 3].
    #[arg(long, allow_negative_numbers = true)]
    pub sigma_floor_alpha: Option<i32>,
    /// Stopping rule [default: relative].
    #[arg(long, value_parser = STOPPING)]
    pub stopping: Option<String>,
    /// Anderson memory, 0 to disable [default: 5].
    #[arg(long)]
    pub anderson: Option<usize>,
    /// Reach small noise floors through a decreasing schedule (sgcl) [default: true].
    #[arg(long)]
    pub continuation: Option<bool>,
}

#[derive(Debug, Args, Serialize)]
pub struct DataFlags {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub q: Option<usize>,
    /// Row block sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub blocks: Option<Vec<usize>>,
    /// Per-block noise multipliers, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub noise_mult: Option<Vec<f64>>,
    /// Correlation between neighbouring features.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Number of nonzero coefficient rows.
    #[arg(long)]
    pub support: Option<usize>,
    #[arg(long)]
    pub snr: Option<f64>,
    #[arg(long, value_parser = SNR_DEFINITIONS)]
    pub snr_definition: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataFlags,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct InputFlags {
    /// Directory holding X.csv, Y.csv and optionally meta.json.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub x: Option<PathBuf>,
    #[arg(long)]
    pub y: Option<PathBuf>,
    #[arg(long)]
    pub meta: Option<PathBuf>,
    /// Row block sizes, comma separated; read from meta.json when absent.
    #[arg(long, value_delimiter = ',')]
    pub blocks: Option<Vec<usize>>,
    #[arg(long, value_parser = SOLVERS)]
    pub solver: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputFlags,
    /// Absolute regularization level.
    #[arg(long, conflicts_with = "lambda_ratio")]
    pub lambda: Option<f64>,
    /// Regularization level as a fraction of the solver's critical level.
    #[arg(long)]
    pub lambda_ratio: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverFlags,
}

#[derive(Debug, Args, Serialize)]
pub struct PathArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputFlags,
    /// Grid length [default: 15].
    #[arg(long)]
    pub num: Option<usize>,
    /// Smallest ratio of the log-spaced grid [default: 0.1].
    #[arg(long)]
    pub ratio_min: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverFlags,
}

#[derive(Debug, Args, Serialize)]
pub struct ExperimentArgs {
    #[arg(value_enum)]
    #[serde(skip)]
    pub name: ExperimentKind,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataFlags,
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',', value_parser = SOLVERS)]
    pub solvers: Option<Vec<String>>,
    #[arg(long)]
    pub num: Option<usize>,
    #[arg(long)]
    pub ratio_min: Option<f64>,
    /// Numbers of averaged repetitions (trials).
    #[arg(long, value_delimiter = ',')]
    pub t_values: Option<Vec<usize>>,
    /// Fixed regularization ratio (trials).
    #[arg(long)]
    pub lambda_ratio: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverFlags,
}
