use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Energy-aware UAV data-collection tours: generate instances, run the
/// exact/greedy/ACO/learned solvers, train and evaluate policies, and emit
/// comparison tables and trajectory plots.
#[derive(Parser)]
#[command(name = "uavtour", version, max_term_width = 100)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Write a corpus of random instances as JSON files.
    Generate(GenerateArgs),
    /// Run a solver over instances and emit one CSV row per instance.
    Solve(SolveArgs),
    /// Train the tour policy with the REINFORCE-with-baseline loop.
    Train(TrainArgs),
    /// Compare the trained policy against all baselines on a test set.
    Evaluate(EvaluateArgs),
    /// Mean energy-ratio tables over omega and cluster-count sweeps.
    Compare(CompareArgs),
    /// Render an instance and one solver's tour as an SVG.
    Plot(PlotArgs),
}

#[derive(Args)]
pub struct GenerateArgs {
    /// Clusters per instance.
    #[arg(long)]
    pub k: usize,
    /// Nodes per cluster.
    #[arg(long)]
    pub n: usize,
    /// Cluster region size, m.
    #[arg(long, default_value_t = 100.0)]
    pub zeta: f64,
    /// Square playing-field side, m.
    #[arg(long, default_value_t = 1000.0)]
    pub area: f64,
    /// How many instances to write.
    #[arg(long)]
    pub count: usize,
    /// Base seed; file seeds derive from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Clone)]
pub struct AcoArgs {
    #[arg(long, default_value_t = 30)]
    pub ants: usize,
    #[arg(long, default_value_t = 200)]
    pub iterations: usize,
    #[arg(long, default_value_t = 0.1)]
    pub evaporation: f64,
    #[arg(long, default_value_t = 1.0)]
    pub pheromone_weight: f64,
    #[arg(long, default_value_t = 5.0)]
    pub visibility_weight: f64,
    #[arg(long, default_value_t = 0)]
    pub aco_seed: u64,
}

#[derive(Args)]
pub struct SolveArgs {
    /// Instance JSON files; mixes with --dir.
    #[arg(long, num_args = 1..)]
    pub instances: Vec<PathBuf>,
    /// Directory of instance JSON files (sorted by name).
    #[arg(long)]
    pub dir: Option<PathBuf>,
    /// exact | greedy | aco | drl
    #[arg(long)]
    pub solver: String,
    /// Objective weight between ground and UAV energy.
    #[arg(long, default_value_t = 0.5)]
    pub omega: f64,
    /// TOML file overriding the physical energy parameters.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Trained checkpoint; required for --solver drl.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sidecar CSV for wall-clock timings (not byte-reproducible).
    #[arg(long)]
    pub timings: Option<PathBuf>,
    #[command(flatten)]
    pub aco: AcoArgs,
}

#[derive(Args)]
pub struct TrainArgs {
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 10_000)]
    pub steps: u64,
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    #[arg(long, default_value_t = 100.0)]
    pub zeta: f64,
    #[arg(long, default_value_t = 1000.0)]
    pub area: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub actor_lr: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub critic_lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 64)]
    pub embed_dim: usize,
    #[arg(long, default_value_t = 500)]
    pub eval_every: u64,
    #[arg(long, default_value_t = 30)]
    pub eval_count: usize,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Append per-step statistics CSV here.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// JSON training config; keys present in the file override the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Directory of instance JSON files; generated fresh when omitted.
    #[arg(long)]
    pub dir: Option<PathBuf>,
    /// Clusters per generated test instance (defaults to the checkpoint's K).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    #[arg(long, default_value_t = 100.0)]
    pub zeta: f64,
    #[arg(long, default_value_t = 1000.0)]
    pub area: f64,
    /// Number of generated test instances.
    #[arg(long, default_value_t = 30)]
    pub count: usize,
    /// Base seed for generated test instances.
    #[arg(long, default_value_t = 9000)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.5)]
    pub omega: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub aco: AcoArgs,
}

#[derive(Args)]
pub struct CompareArgs {
    /// Directory of instance JSON files (grouped by K).
    #[arg(long)]
    pub dir: PathBuf,
    /// Comma-separated omega values.
    #[arg(long, value_delimiter = ',', default_value = "0.0,0.3,0.6,0.9")]
    pub omegas: Vec<f64>,
    /// Comma-separated solvers out of greedy,aco,drl (exact always runs).
    #[arg(long, value_delimiter = ',', default_value = "greedy,aco")]
    pub solvers: Vec<String>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub aco: AcoArgs,
}

#[derive(Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// exact | greedy | aco | drl
    #[arg(long)]
    pub solver: String,
    #[arg(long, default_value_t = 0.5)]
    pub omega: f64,
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub aco: AcoArgs,
}
