use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Train, attack and analyse Blockland robot policies.
#[derive(Debug, Parser)]
#[command(name = "blockland", version)]
pub struct Cli {
    /// JSON file with PPO settings; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Print the fully resolved configuration as JSON and exit.
    #[arg(long, global = true)]
    pub dump_config: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a robot victim against a scripted human.
    TrainVictim(TrainVictimArgs),
    /// Train a human adversary against a frozen victim.
    TrainAdversary(TrainAdversaryArgs),
    /// Evaluate one victim against one opponent.
    Evaluate(EvaluateArgs),
    /// Evaluate every victim against arand and every adversary.
    Matrix(MatrixArgs),
    /// Input-layer L1 norms over a run's checkpoints.
    WeightNorms(WeightNormsArgs),
    /// Visitation heatmap of a human-side policy next to an idle robot.
    Heatmap(HeatmapArgs),
    /// Summary table and figures from a pairings file.
    Report(ReportArgs),
    /// Run the whole experiment: victims, adversaries, matrices, reports.
    Grid(GridArgs),
}

/// Overrides for individual PPO settings.
#[derive(Debug, Default, Args)]
pub struct PpoArgs {
    #[arg(long)]
    pub total_steps: Option<u64>,
    #[arg(long)]
    pub n_envs: Option<usize>,
    #[arg(long)]
    pub rollout_len: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub minibatch_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub gae_lambda: Option<f64>,
    #[arg(long)]
    pub clip_range: Option<f64>,
    #[arg(long)]
    pub ent_coef: Option<f64>,
    #[arg(long)]
    pub vf_coef: Option<f64>,
    #[arg(long)]
    pub max_grad_norm: Option<f64>,
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
}

#[derive(Debug, Args)]
pub struct LevelArg {
    /// Level JSON; the built-in twosides level when omitted.
    #[arg(long, value_name = "FILE")]
    pub level: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainVictimArgs {
    #[arg(long)]
    pub seed: u64,
    /// Scripted human to train against.
    #[arg(long, default_value = "arand", value_parser = ["arand", "natural"])]
    pub opponent: String,
    #[command(flatten)]
    pub level: LevelArg,
    /// Run directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Step environments on this many threads.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[command(flatten)]
    pub ppo: PpoArgs,
}

#[derive(Debug, Args)]
pub struct TrainAdversaryArgs {
    /// Victim checkpoint or run directory.
    #[arg(long)]
    pub victim: PathBuf,
    /// Identifier recorded for the victim; defaults to its run directory name.
    #[arg(long)]
    pub victim_id: Option<String>,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub level: LevelArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[command(flatten)]
    pub ppo: PpoArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Robot checkpoint, run directory, or scripted tag.
    #[arg(long)]
    pub victim: String,
    /// Human checkpoint, run directory, or scripted tag.
    #[arg(long)]
    pub opponent: String,
    #[arg(long, default_value_t = 30)]
    pub episodes: usize,
    #[arg(long, default_value_t = 1000)]
    pub seed_base: u64,
    #[command(flatten)]
    pub level: LevelArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MatrixArgs {
    #[arg(long)]
    pub victims_dir: PathBuf,
    #[arg(long)]
    pub adversaries_dir: PathBuf,
    #[arg(long, default_value_t = 30)]
    pub episodes: usize,
    #[arg(long, default_value_t = 1000)]
    pub seed_base: u64,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[command(flatten)]
    pub level: LevelArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WeightNormsArgs {
    /// Training run directory.
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    /// Human checkpoint, run directory, or scripted tag.
    #[arg(long)]
    pub policy: String,
    #[arg(long, default_value_t = 100)]
    pub episodes: usize,
    #[arg(long, default_value_t = 0.5)]
    pub cell_size: f64,
    #[arg(long, default_value_t = 1000)]
    pub seed: u64,
    #[command(flatten)]
    pub level: LevelArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub pairings: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Accept a pairings file that has no manifest next to it.
    #[arg(long = "unsafe")]
    pub allow_unmanifested: bool,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long, default_value = "full", value_parser = ["full", "smoke"])]
    pub preset: String,
    /// Scripted opponents to train victims against, one arm each.
    #[arg(long, value_delimiter = ',', default_value = "arand,natural")]
    pub arms: Vec<String>,
    /// Concurrent training runs and evaluations.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, default_value_t = 1000)]
    pub seed_base: u64,
    #[command(flatten)]
    pub level: LevelArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub ppo: PpoArgs,
}
