use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "dprel", version, about = "Differentially private tests for relevant dependencies")]
#[command(args_conflicts_with_subcommands = true, arg_required_else_help = true)]
pub struct Cli {
    /// Re-derive every decision in a recorded JSON result from its releases.
    #[arg(long, value_name = "RESULT")]
    pub verify: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test H0: max |theta| <= delta at one or more thresholds.
    Test(TestArgs),
    /// Estimate Delta-hat, the smallest threshold at which the test stops rejecting.
    Scan(TestArgs),
    /// Privately estimate the extremal (or relevant) set of coordinates.
    Extremal(ExtremalArgs),
    /// Rejection rates of the tests on a simulation design, as CSV.
    Simulate(SimulateArgs),
    /// Privacy cost of the sparse-vector baseline.
    SvtCost(SvtArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelChoice {
    Kendall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BranchChoice {
    Auto,
    Gumbel,
    Hoeffding,
    Finite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleChoice {
    Squared,
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConventionChoice {
    Ceiling,
    Continuous,
}

/// Data source and kernel options shared by the data-driven commands.
#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file, one row per individual, optional header line.
    pub input: PathBuf,

    #[arg(long, value_enum, default_value = "kendall")]
    pub kernel: KernelChoice,

    /// Keep only coordinate pairs (i, j) with j - i >= m.
    #[arg(long, value_name = "m")]
    pub band: Option<usize>,

    /// Add N(0, sd^2) noise to every entry to break ties first.
    #[arg(long, value_name = "SD")]
    pub jitter: Option<f64>,

    #[arg(long)]
    pub seed: Option<u64>,

    /// zCDP budget.
    #[arg(long)]
    pub rho: Option<f64>,

    /// Approximation slack; defaults to 1/n.
    #[arg(long = "dp-delta")]
    pub dp_delta: Option<f64>,

    /// Linear gap penalty nu(j) = c (1 - j/n) for the extremal-set step.
    #[arg(long, value_name = "c")]
    pub penalty: Option<f64>,

    /// Write the JSON result here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// JSON file with default settings; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Threshold, or a comma-separated descending grid.
    #[arg(long, value_delimiter = ',')]
    pub delta: Option<Vec<f64>>,

    #[arg(long)]
    pub alpha: Option<f64>,

    /// Bootstrap replicates.
    #[arg(long = "B", value_name = "B")]
    pub bootstrap: Option<usize>,

    #[arg(long)]
    pub gamma: Option<f64>,

    #[arg(long, value_enum)]
    pub branch: Option<BranchChoice>,

    /// Share of rho spent on the extremal-set step (default 1/3).
    #[arg(long = "gap-budget-fraction")]
    pub gap_budget_fraction: Option<f64>,

    #[arg(long = "gumbel-scale", value_enum)]
    pub gumbel_scale: Option<ScaleChoice>,
}

#[derive(Debug, Args)]
pub struct ExtremalArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Estimate {i : |theta_i| > DELTA} instead of the extremal set.
    #[arg(long, value_name = "DELTA")]
    pub threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// F1, F2, U1 or U2.
    #[arg(long)]
    pub model: String,

    #[arg(long)]
    pub n: usize,

    /// Dimension; defaults to ceil(sqrt(2n)).
    #[arg(long)]
    pub d: Option<usize>,

    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub rho: Vec<f64>,

    /// Descending thresholds; defaults to 0.99, 0.98, ..., 0.01.
    #[arg(long = "delta-grid", value_delimiter = ',')]
    pub delta_grid: Option<Vec<f64>>,

    #[arg(long, default_value_t = 200)]
    pub reps: usize,

    #[arg(long = "B", value_name = "B", default_value_t = 200)]
    pub bootstrap: usize,

    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,

    #[arg(long = "dp-delta")]
    pub dp_delta: Option<f64>,

    #[arg(long, value_delimiter = ',', default_value = "hdtest")]
    pub methods: Vec<String>,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// CSV destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SvtArgs {
    #[arg(long)]
    pub n: usize,

    /// Number of queries; defaults to n(n-1)/2.
    #[arg(long)]
    pub p: Option<u64>,

    #[arg(long)]
    pub sigma: f64,

    /// Query noise; defaults to --sigma.
    #[arg(long)]
    pub sigma2: Option<f64>,

    /// Query sensitivity; defaults to 8/n.
    #[arg(long)]
    pub sensitivity: Option<f64>,

    /// Defaults to 1/n.
    #[arg(long = "dp-delta")]
    pub dp_delta: Option<f64>,

    #[arg(long, value_enum, default_value = "ceiling")]
    pub convention: ConventionChoice,
}
