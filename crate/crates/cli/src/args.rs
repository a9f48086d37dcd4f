use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "conedeflate",
    version,
    about = "Rank-one deflation of positive semidefinite matrices, Parseval frames and kernel features"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a residual chain on a PSD matrix and write a chain report.
    Decompose(DecomposeArgs),
    /// Build a Parseval frame for C^dim by exhausting the identity.
    Parsevalize(ParsevalizeArgs),
    /// Check whether a listed chain {R, E} comes from unit directions.
    VerifyChain(VerifyArgs),
    /// Extract sample-level kernel features by deflating the identity.
    KernelFeatures(KernelArgs),
    /// Audit a chain file or summarize a chain/frame report.
    Report(ReportArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StrategyFlag {
    Greedy,
    WeakGreedy,
    Cyclic,
    Random,
    Explicit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KernelFlag {
    Gaussian,
    Poly,
    Linear,
    Explicit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScheduleFlag {
    Greedy,
    Cyclic,
}

#[derive(Debug, Args)]
pub struct StrategyArgs {
    /// Direction policy; defaults to greedy, or to the kind in --strategy-config.
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyFlag>,
    /// Weak-greedy constant in (0, 1].
    #[arg(long)]
    pub c: Option<f64>,
    /// Seed for random directions and generated weak-greedy pools.
    #[arg(long)]
    pub seed: Option<u64>,
    /// StrategyConfig JSON (pool, explicit list, fallback flag).
    #[arg(long, value_name = "PATH")]
    pub strategy_config: Option<PathBuf>,
    /// Size of the generated weak-greedy pool when none is configured [default: 16*dim].
    #[arg(long)]
    pub pool_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct StopArgs {
    #[arg(long, default_value_t = 1000)]
    pub max_steps: usize,
    #[arg(long)]
    pub trace_tol: Option<f64>,
    #[arg(long)]
    pub opnorm_tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TolArgs {
    /// ToleranceConfig JSON; missing fields take defaults.
    #[arg(long, value_name = "PATH")]
    pub tolerances: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// Matrix JSON {dim, real, imag?}.
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    /// Report JSON path; sidecars <stem>.energy.csv and <stem>.chain.json go next to it.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub strategy: StrategyArgs,
    #[command(flatten)]
    pub stop: StopArgs,
    #[command(flatten)]
    pub tol: TolArgs,
    /// Include E_n and u_n in the report.
    #[arg(long)]
    pub emit_vectors: bool,
    /// Write the chain {R, E} for verify-chain.
    #[arg(long)]
    pub emit_chain: bool,
}

#[derive(Debug, Args)]
pub struct ParsevalizeArgs {
    #[arg(long)]
    pub dim: usize,
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub strategy: StrategyArgs,
    #[command(flatten)]
    pub stop: StopArgs,
    #[command(flatten)]
    pub tol: TolArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Chain JSON {"R": [matrix...], "E": [vector...]}.
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub tol: TolArgs,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    /// Dataset CSV (one point per row), or a Gram matrix JSON with --kernel explicit.
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// Summary JSON path; the feature table goes to <stem>.features.csv.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub kernel: Option<KernelFlag>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub degree: Option<u32>,
    #[arg(long)]
    pub offset: Option<f64>,
    /// Kernel JSON {kind, sigma?, degree?, offset?} or {kind: "explicit", gram}.
    #[arg(long, value_name = "PATH")]
    pub kernel_config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "greedy")]
    pub schedule: ScheduleFlag,
    #[arg(long, default_value_t = 10_000)]
    pub max_steps: usize,
    #[arg(long)]
    pub trace_tol: Option<f64>,
    #[arg(long)]
    pub opnorm_tol: Option<f64>,
    #[command(flatten)]
    pub tol: TolArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Chain JSON, chain report JSON or frame report JSON.
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}
