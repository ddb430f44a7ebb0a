use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use compmc::{PriorSpec, SamplerKind};

#[derive(Debug, Parser)]
#[command(name = "compmc", version, about = "MCMC sampling of sparse composition ratios")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run chains for every prior × sampler combination and write statistics.
    Sample(SampleArgs),
    /// Verify the kernels against exact enumeration on a small space.
    OracleCheck(OracleArgs),
    /// Generate recipes with taste and timing scorers.
    Demo(DemoArgs),
    /// Write a seeded synthetic recipe dataset.
    SynthData(SynthArgs),
}

#[derive(Debug, Args, Clone)]
pub struct SpaceArgs {
    /// Number of bins N.
    #[arg(long)]
    pub bins: usize,
    /// Total M.
    #[arg(long)]
    pub total: u32,
}

#[derive(Debug, Args, Clone)]
pub struct SampleArgs {
    #[command(flatten)]
    pub space: SpaceArgs,
    /// Sparsity prior, e.g. `uniform{2,5}` or `{2:13,3:29}`; repeatable.
    #[arg(long = "prior", required = true)]
    pub priors: Vec<PriorSpec>,
    /// naive, gibbs or accelerated; repeatable, defaults to all three.
    #[arg(long = "sampler")]
    pub samplers: Vec<SamplerKind>,
    /// Recorded iterations per chain.
    #[arg(long = "iters")]
    pub iterations: usize,
    #[arg(long, default_value_t = compmc::sampler::DEFAULT_BURN_IN)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    /// Chain c is seeded with seed + c.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write every recorded state as JSON lines.
    #[arg(long)]
    pub trace: bool,
    /// Evaluate every d-th split only (approximate; 1 is exact).
    #[arg(long, default_value_t = 1)]
    pub split_stride: u32,
}

#[derive(Debug, Args, Clone)]
pub struct OracleArgs {
    #[command(flatten)]
    pub space: SpaceArgs,
    /// Defaults to uniform over every feasible nonzero count.
    #[arg(long)]
    pub prior: Option<PriorSpec>,
    #[arg(long = "sampler")]
    pub samplers: Vec<SamplerKind>,
    /// Recorded iterations of the chain compared against the exact distribution.
    #[arg(long = "iters", default_value_t = 200_000)]
    pub iterations: usize,
    #[arg(long, default_value_t = compmc::sampler::DEFAULT_BURN_IN)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest accepted total variation between chain and exact distribution.
    #[arg(long, default_value_t = 0.02)]
    pub tv_tol: f64,
    /// Optional directory for a CSV copy of the report.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Multiply every Metropolis ratio in the assembled matrices (test hook).
    #[arg(long, hide = true)]
    pub corrupt_acceptance: Option<f64>,
}

#[derive(Debug, Args, Clone)]
pub struct DemoArgs {
    /// Recipe CSV (`name,taste,timing,ingredient,amount,unit`).
    #[arg(long, required_unless_present = "synthetic", conflicts_with = "synthetic")]
    pub data: Option<PathBuf>,
    /// Unit table overriding the defaults (`name=factor` lines).
    #[arg(long)]
    pub units: Option<PathBuf>,
    /// Use a synthetic dataset generated from the seed.
    #[arg(long)]
    pub synthetic: bool,
    #[arg(long, default_value = "Fresh")]
    pub taste: String,
    #[arg(long, default_value = "All day")]
    pub timing: String,
    #[arg(long, default_value_t = 100)]
    pub trees: usize,
    #[arg(long, default_value_t = 8)]
    pub depth: usize,
    #[arg(long = "iters", default_value_t = 100_000)]
    pub iterations: usize,
    #[arg(long, default_value_t = compmc::sampler::DEFAULT_BURN_IN)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub c_taste: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c_timing: f64,
    #[arg(long, default_value_t = 10)]
    pub baseline_repeats: usize,
    /// Dataset recipes listed per generated recipe.
    #[arg(long, default_value_t = 3)]
    pub nearest: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Clone)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}
