//! Experiment drivers behind the `plan` command line.
//!
//! Every command is a pure function of its flags, its input files and its
//! seeds. Outputs carry the hash of the configuration that produced them:
//! JSON files in a `config_hash` field, CSV files in a leading `#` comment,
//! and JSONL sample files (whose lines must all be samples) in a
//! `<file>.manifest.json` sidecar.

mod commands;
mod config;
mod files;

pub use commands::{
    bench_efficiency, collect, efficiency_rows, eval, gen_maps, online, oracle, oracle_label,
    train, BenchRow, OnlineRoundSummary, OnlineSummary, OracleRun, OracleSampling, BENCH_WEIGHT,
    COMPLETE, EVAL_PURPOSE, INCOMPLETE, LOCAL_ASTAR, TRAIN_PURPOSE,
};
pub use config::{config_hash, ExperimentConfig, TrainParams};
pub use files::{load_map_dir, manifest_path, maps_hash, read_samples, write_samples};

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::planner::Guidance;
use crate::search::EscapeRule;
use crate::statespace::DomainKind;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "LOHA_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "plan",
    about = "Local heuristic A* with backtracking data collection"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate random obstacle maps and a manifest.
    GenMaps(GenMapsArgs),
    /// Solve problems and collect backtracked samples.
    Collect(CollectArgs),
    /// Label states from global-search trees with the local oracle.
    Oracle(OracleArgs),
    /// Train a residual model on a sample file.
    Train(TrainArgs),
    /// Compare a trained planner against weighted A*.
    Eval(EvalArgs),
    /// Alternate collection and retraining.
    Online(OnlineArgs),
    /// Expansions-per-sample table for oracle and backtracked collection.
    BenchEfficiency(BenchArgs),
}

/// Flags shared by most commands.
#[derive(Clone, Debug, Args)]
pub struct CommonArgs {
    /// Defaults to car4d, or to the model's domain when a model is given.
    #[arg(long, value_enum)]
    pub domain: Option<DomainKind>,
    /// Local window size(s), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<u32>,
    /// Suboptimality weight(s), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub w: Vec<f64>,
    /// Root seed(s), comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub seed: Vec<u64>,
    /// Cap on expansions per search.
    #[arg(long)]
    pub expansion_limit: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Problem sampling flags.
#[derive(Clone, Debug, Args)]
pub struct ProblemArgs {
    /// Number of start-goal problems.
    #[arg(long)]
    pub problems: Option<usize>,
    /// Chebyshev start-goal distance band, in cells.
    #[arg(long, default_value_t = 10)]
    pub min_distance: u32,
    #[arg(long, default_value_t = 60)]
    pub max_distance: u32,
}

#[derive(Clone, Debug, Args)]
pub struct GenMapsArgs {
    #[arg(long, default_value = "0")]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub num_maps: usize,
    #[arg(long, default_value_t = 256)]
    pub width: usize,
    #[arg(long, default_value_t = 256)]
    pub height: usize,
    #[arg(long, default_value_t = 0.3)]
    pub density: f64,
}

#[derive(Clone, Debug, Args)]
pub struct CollectArgs {
    #[arg(long)]
    pub map_dir: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub problems: ProblemArgs,
    /// Collect while planning with this model instead of weighted A*.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Guidance::default())]
    pub guidance: Guidance,
}

#[derive(Clone, Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub map_dir: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub problems: ProblemArgs,
    /// States drawn from each global-search tree.
    #[arg(long, default_value_t = 50)]
    pub states_per_problem: usize,
    /// Treat states closed by the global search as obstacles.
    #[arg(long)]
    pub closed_list_obstacles: bool,
    #[arg(long, value_enum, default_value_t = EscapeRule::Reach)]
    pub escape: EscapeRule,
}

#[derive(Clone, Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub map_dir: PathBuf,
    /// Sample file (JSONL).
    #[arg(long)]
    pub samples: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub params: TrainParams,
}

#[derive(Clone, Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub map_dir: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub problems: ProblemArgs,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value_t = Guidance::default())]
    pub guidance: Guidance,
}

#[derive(Clone, Debug, Args)]
pub struct OnlineArgs {
    #[arg(long)]
    pub map_dir: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Held-out evaluation problems.
    #[command(flatten)]
    pub problems: ProblemArgs,
    /// Problems solved per round before retraining.
    #[arg(long, default_value_t = 5)]
    pub round_size: usize,
    #[arg(long, default_value_t = 6)]
    pub rounds: usize,
    /// Continue from the previous round's weights.
    #[arg(long)]
    pub fine_tune: bool,
    #[arg(long, value_enum, default_value_t = Guidance::default())]
    pub guidance: Guidance,
    #[command(flatten)]
    pub params: TrainParams,
}

#[derive(Clone, Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub map_dir: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub problems: ProblemArgs,
    /// States per global-search tree labelled by the oracle.
    #[arg(long, default_value_t = 50)]
    pub states_per_problem: usize,
}

/// Process exit status for a failed command.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_io() {
        3
    } else {
        2
    }
}

/// Caps the global worker pool from [`THREADS_ENV`].
pub fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            Error::Config(format!("{THREADS_ENV}={value:?} is not a positive integer"))
        })?;
    // A pool that already exists (tests, embedding callers) is left alone.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

/// Runs one parsed command line and returns a one-line summary.
pub fn run(cli: Cli) -> Result<String> {
    configure_threads()?;
    match cli.command {
        Command::GenMaps(a) => gen_maps(&a),
        Command::Collect(a) => collect(&a),
        Command::Oracle(a) => oracle(&a),
        Command::Train(a) => train(&a),
        Command::Eval(a) => eval(&a),
        Command::Online(a) => online(&a),
        Command::BenchEfficiency(a) => bench_efficiency(&a),
    }
}
