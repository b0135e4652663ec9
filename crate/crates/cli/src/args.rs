use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_SUBSTREAM: u64 = 0;
pub const DEFAULT_TOL_ABS: f64 = 1e-9;
pub const DEFAULT_TOL_REL: f64 = 1e-6;

#[derive(Parser, Debug, Clone)]
#[command(
    name = "sasdp",
    version,
    about = "Symmetric alpha-stable noise: densities, privacy budgets and privatized queries"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, PartialEq)]
#[command(next_help_heading = "Global options")]
pub struct GlobalOpts {
    /// Seed of the random stream.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Substream of the random stream; distinct substreams are independent.
    #[arg(long, global = true, default_value_t = DEFAULT_SUBSTREAM)]
    pub substream: u64,
    /// Absolute tolerance of density evaluation.
    #[arg(long = "tol-abs", global = true, default_value_t = DEFAULT_TOL_ABS)]
    pub tol_abs: f64,
    /// Relative tolerance of density evaluation.
    #[arg(long = "tol-rel", global = true, default_value_t = DEFAULT_TOL_REL)]
    pub tol_rel: f64,
    /// Output file; a `<out>.manifest.json` sidecar is written next to it.
    /// Without it the main artifact goes to stdout.
    #[serde(skip)]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum Command {
    /// Tabulate a density on a uniform grid (CSV: x,pdf).
    Density(DensityArgs),
    /// Evaluate a bounded query on a CSV dataset and release it with noise.
    Privatize(PrivatizeArgs),
    /// Privacy budget of the SaS mechanism (JSON report plus loss-curve CSV).
    Epsilon(EpsilonArgs),
    /// Noise scale for a target budget or for hypothesis-test error floors.
    Calibrate(CalibrateArgs),
    /// Run a statistical self-check suite.
    Validate(ValidateArgs),
    /// Re-run a command from its manifest and compare output digests.
    #[serde(skip)]
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Density(_) => "density",
            Command::Privatize(_) => "privatize",
            Command::Epsilon(_) => "epsilon",
            Command::Calibrate(_) => "calibrate",
            Command::Validate(_) => "validate",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, PartialEq)]
#[command(allow_negative_numbers = true)]
pub struct DensityArgs {
    /// Stability index in (0, 2].
    #[arg(long)]
    pub alpha: f64,
    /// Scale, positive.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Location.
    #[arg(long, default_value_t = 0.0)]
    pub mu: f64,
    /// First grid point.
    #[arg(long = "x-min")]
    pub x_min: f64,
    /// Last grid point.
    #[arg(long = "x-max")]
    pub x_max: f64,
    /// Number of grid points, at least 2.
    #[arg(long)]
    pub steps: usize,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PrivatizeArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Query as JSON, inline or a path to a JSON file.
    #[arg(long)]
    pub query: String,
    /// Mechanism as JSON, inline or a path to a JSON file.
    #[arg(long)]
    pub mechanism: String,
    /// Population cap used as the upper bound of COUNT queries.
    #[arg(long = "n-max")]
    pub n_max: Option<u64>,
    /// Also write the unperturbed query values (debugging only).
    #[arg(long = "debug-retain-clean")]
    pub debug_retain_clean: bool,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EpsilonArgs {
    /// Stability index in (0, 2].
    #[arg(long)]
    pub alpha: f64,
    /// Scale, positive.
    #[arg(long)]
    pub gamma: f64,
    /// L1 sensitivity of the released query, positive.
    #[arg(long)]
    pub sensitivity: f64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CalibrateArgs {
    /// Stability index in [1, 2).
    #[arg(long)]
    pub alpha: f64,
    /// L1 sensitivity of the released query, positive.
    #[arg(long)]
    pub sensitivity: f64,
    /// Target budget; alternatively give both --p-bound and --q-bound.
    #[arg(long, conflicts_with_all = ["p_bound", "q_bound"], required_unless_present = "p_bound")]
    pub epsilon: Option<f64>,
    /// Floor on the false-alarm rate of any test between neighbours.
    #[arg(long = "p-bound", requires = "q_bound")]
    pub p_bound: Option<f64>,
    /// Floor on the missed-detection rate of any test between neighbours.
    #[arg(long = "q-bound", requires = "p_bound")]
    pub q_bound: Option<f64>,
    /// Tolerance on the achieved budget.
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ValidateArgs {
    /// Suite to run.
    pub suite: Suite,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Sampler,
    Closure,
    Mad,
    Privacy,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run.
    pub manifest: PathBuf,
}
