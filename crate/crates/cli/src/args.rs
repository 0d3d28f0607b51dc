//! Command-line surface. Flags carry the mathematical symbols (`--alpha`,
//! `--kappa`, `--n`, ...) with descriptive aliases.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "bridge-stein", version, about = "Simulate bridge dynamics and evaluate Wasserstein bounds")]
pub struct Cli {
    /// Flat `key = value` file with defaults for any flag; flags given on
    /// the command line take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Run chain ensembles, single trajectories or exact bridge samplers.
    Sample(SampleArgs),
    /// Estimate the contraction curve of the coalescing coupling.
    Couple(CoupleArgs),
    /// Empirical W1 between samples of two bridge laws.
    Wasserstein(WassersteinArgs),
    /// Evaluate a closed-form or Monte Carlo bound.
    Bound(BoundArgs),
    /// Compare the scheme with the unit-rate bridge against its bound.
    SchemeCheck(SchemeCheckArgs),
    /// Evaluate the filtering bound for an observation path.
    Filtering(FilteringArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Sample(_) => "sample",
            Command::Couple(_) => "couple",
            Command::Wasserstein(_) => "wasserstein",
            Command::Bound(_) => "bound",
            Command::SchemeCheck(_) => "scheme-check",
            Command::Filtering(_) => "filtering",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Sample(a) => &a.common,
            Command::Couple(a) => &a.common,
            Command::Wasserstein(a) => &a.common,
            Command::Bound(a) => &a.common,
            Command::SchemeCheck(a) => &a.common,
            Command::Filtering(a) => &a.common,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Master seed; every replica derives its own stream from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output file (standard output when absent).
    #[arg(long, short, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Hypercube,
    Lattice,
    Scheme,
    PoissonDiag,
    Nonhomogeneous,
}

/// Rate families for walks with level-dependent rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `a(j) b(j+1) = 1` with total-rate increments bounded by `kappa`.
    Reversible,
    /// Constant total rate with products `a(j) b(j+1)` of ratio `rho`.
    ConstantSpeed,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,

    /// Flip rate of the walk on {0, 1}.
    #[arg(long, visible_alias = "flip-rate", default_value_t = 1.0)]
    pub alpha: f64,

    /// Up-jump rate of the walk on Z.
    #[arg(long, visible_alias = "up-rate", default_value_t = 1.0)]
    pub j_plus: f64,

    /// Down-jump rate of the walk on Z.
    #[arg(long, visible_alias = "down-rate", default_value_t = 1.0)]
    pub j_minus: f64,

    /// Number of blocks of the scheme.
    #[arg(long = "n", visible_alias = "blocks", default_value_t = 10)]
    pub n: usize,

    /// Birth rate of the integer chain.
    #[arg(long, visible_alias = "birth-rate", default_value_t = 1.0)]
    pub lambda: f64,

    /// Rate family of the level-dependent walk.
    #[arg(long, value_enum, default_value_t = Family::Reversible)]
    pub family: Family,

    /// Total-rate increment bound of the reversible family.
    #[arg(long, visible_alias = "increment-bound", default_value_t = 0.5)]
    pub kappa: f64,

    /// Ratio of the largest to the smallest rate product of the
    /// constant-speed family.
    #[arg(long, visible_alias = "product-ratio", default_value_t = 2.0)]
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleMode {
    /// Final state size and event count of independent replicas.
    Chain,
    /// Every event of one replica.
    Trajectory,
    /// Independent draws from the exact bridge law.
    Bridge,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    #[arg(long, value_enum, default_value_t = SampleMode::Chain)]
    pub mode: SampleMode,

    /// Time horizon of chain runs.
    #[arg(long, visible_alias = "horizon", default_value_t = 50.0)]
    pub t_end: f64,

    /// Number of chain replicas.
    #[arg(long, default_value_t = 1000)]
    pub replicas: u64,

    /// Number of bridge draws.
    #[arg(long, default_value_t = 100)]
    pub count: usize,

    /// `csv` or `jsonl`; chain ensembles default to CSV, the other modes
    /// to JSONL.
    #[arg(long, value_enum)]
    pub format: Option<Format>,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartKind {
    /// `V` from the bridge law and a uniform pair move, per replica.
    Stationary,
    /// `V` empty and the pair move `(r, s)`.
    Fixed,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CoupleArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    /// Comma-separated times of the contraction curve.
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2,4")]
    pub t_grid: Vec<f64>,

    #[arg(long, default_value_t = 10_000)]
    pub replicas: u64,

    #[arg(long, value_enum, default_value_t = StartKind::Stationary)]
    pub start: StartKind,

    /// First time of the initial pair move for `--start fixed`.
    #[arg(long, default_value_t = 0.25)]
    pub r: f64,

    /// Second time of the initial pair move for `--start fixed`.
    #[arg(long, default_value_t = 0.75)]
    pub s: f64,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct WassersteinArgs {
    /// Left law, e.g. `lattice:j_plus=1.2,j_minus=1`, `hypercube:alpha=1.2`
    /// or `scheme:n=10`.
    #[arg(long)]
    pub left: String,

    /// Right law, same syntax as `--left`.
    #[arg(long)]
    pub right: String,

    /// Draws per side.
    #[arg(long = "n", visible_alias = "samples", default_value_t = 256)]
    pub n: usize,

    #[arg(long, default_value_t = 1)]
    pub repetitions: usize,

    /// Bootstrap resamplings for the standard error.
    #[arg(long, default_value_t = 50)]
    pub bootstrap: usize,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundVariant {
    PoissonDiag,
    Hypercube,
    Lattice,
    Reversible,
    ConstantSpeed,
    Scheme,
    Nonhomogeneous,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BoundArgs {
    #[arg(long, value_enum)]
    pub variant: BoundVariant,

    /// Flip rates of the first hypercube walk, one per dimension.
    #[arg(long, value_delimiter = ',', visible_alias = "flip-rates")]
    pub alpha: Vec<f64>,

    /// Flip rates of the second hypercube walk, one per dimension.
    #[arg(long, value_delimiter = ',')]
    pub beta: Vec<f64>,

    /// Up rates of the first lattice walk, one per dimension.
    #[arg(long, value_delimiter = ',')]
    pub j_plus: Vec<f64>,

    /// Down rates of the first lattice walk, one per dimension.
    #[arg(long, value_delimiter = ',')]
    pub j_minus: Vec<f64>,

    /// Up rates of the second lattice walk, one per dimension.
    #[arg(long, value_delimiter = ',')]
    pub h_plus: Vec<f64>,

    /// Down rates of the second lattice walk, one per dimension.
    #[arg(long, value_delimiter = ',')]
    pub h_minus: Vec<f64>,

    /// Birth rate of the first integer chain.
    #[arg(long)]
    pub lambda: Option<f64>,

    /// Birth rate of the second integer chain, or the largest rate product
    /// of a constant-speed walk.
    #[arg(long)]
    pub mu: Option<f64>,

    /// Smallest rate product of a constant-speed walk.
    #[arg(long)]
    pub nu: Option<f64>,

    /// Total-rate increment bound.
    #[arg(long, visible_alias = "increment-bound")]
    pub kappa: Option<f64>,

    /// Number of blocks of the scheme.
    #[arg(long = "n", visible_alias = "blocks")]
    pub n: Option<usize>,

    /// Rate family for the Monte Carlo estimator.
    #[arg(long, value_enum, default_value_t = Family::Reversible)]
    pub family: Family,

    /// Product ratio of the constant-speed family for the estimator.
    #[arg(long, visible_alias = "product-ratio", default_value_t = 2.0)]
    pub rho: f64,

    /// Draws of the Monte Carlo estimator.
    #[arg(long, default_value_t = 4000)]
    pub samples: usize,

    /// Independent sampler chains of the Monte Carlo estimator.
    #[arg(long, default_value_t = 16)]
    pub chains: usize,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SchemeCheckArgs {
    /// Number of blocks.
    #[arg(long = "n", visible_alias = "blocks", default_value_t = 10)]
    pub n: usize,

    /// Draws per side of each W1 estimate.
    #[arg(long, default_value_t = 256)]
    pub samples: usize,

    #[arg(long, default_value_t = 20)]
    pub repetitions: usize,

    #[arg(long, default_value_t = 50)]
    pub bootstrap: usize,

    /// Horizon of the chain runs estimating the mean number of up jumps.
    #[arg(long, default_value_t = 50.0)]
    pub t_end: f64,

    /// Chain replicas for the mean number of up jumps.
    #[arg(long, default_value_t = 10_000)]
    pub replicas: u64,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FilteringArgs {
    /// Observation gain of the linear system.
    #[arg(long, visible_alias = "gain", default_value_t = 1.0)]
    pub alpha: f64,

    /// Time horizon `T`.
    #[arg(long, visible_alias = "t-final", default_value_t = 1.0)]
    pub horizon: f64,

    /// Decay exponent of the drift derivative.
    #[arg(long, visible_alias = "decay")]
    pub gamma: f64,

    /// Derivative bound `K` of the drift.
    #[arg(long = "k", visible_alias = "derivative-bound", default_value_t = 0.0)]
    pub k: f64,

    /// Second-derivative bound `M` of the drift.
    #[arg(long = "m", visible_alias = "curvature-bound", default_value_t = 0.0)]
    pub m: f64,

    /// Drift at the origin, `b(0)`.
    #[arg(long, visible_alias = "drift-at-zero", default_value_t = 0.0, allow_hyphen_values = true)]
    pub b0: f64,

    /// Two-column CSV `t,z` with the observation path; `z = 0` when absent.
    #[arg(long, value_name = "PATH")]
    pub observations: Option<PathBuf>,

    /// Grid intervals of the zero observation used without `--observations`.
    #[arg(long, default_value_t = 1000)]
    pub observation_points: usize,

    /// Time points of the sup-moment grid.
    #[arg(long, default_value_t = 256)]
    pub grid_size: usize,

    /// Monte Carlo paths of the sup moment.
    #[arg(long, default_value_t = 10_000)]
    pub replicas: usize,

    #[command(flatten)]
    pub common: Common,
}
