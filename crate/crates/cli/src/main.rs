//! `placekit` — command-line front end for the grid placement toolkit.
//!
//! Subcommands: `parse`, `place`, `regulate`, `train`, `eval`, `ablate`,
//! `render`. Every run resolves its configuration from built-in
//! defaults, an optional `--run-config key = value` file, and explicit
//! flags (in that precedence order), then writes the resolved set next
//! to its outputs. All outputs are byte-stable for a fixed configuration.
//!
//! Exit codes: 0 success, 2 parse/config error, 3 no feasible position,
//! 4 invalid placement, 5 non-finite numerics, 1 anything else.

mod config;
mod ops;
mod svg;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use placekit_core::agent::{CheckpointError, PolicyError, PpoError, TrainError};
use placekit_core::{BookshelfError, EnvError, GeomError, MetricError};

// ---------------------------------------------------------------------------
// Errors and exit codes
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub enum CliError {
    /// Malformed input files, config files, flags, or checkpoints.
    Parse(String),
    /// No feasible cell remains for some block.
    Infeasible(String),
    /// A placement violates the rules (overlap, out of canvas, missing
    /// block positions).
    Placement(String),
    /// Non-finite numerics during training.
    Numeric(String),
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Placement(_) => 4,
            CliError::Numeric(_) => 5,
            CliError::Other(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(m)
            | CliError::Infeasible(m)
            | CliError::Placement(m)
            | CliError::Numeric(m)
            | CliError::Other(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<BookshelfError> for CliError {
    fn from(e: BookshelfError) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl From<GeomError> for CliError {
    fn from(e: GeomError) -> Self {
        match e {
            GeomError::BadCanvas(_) => CliError::Parse(e.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<EnvError> for CliError {
    fn from(e: EnvError) -> Self {
        match e {
            EnvError::NoValidPosition(_) => CliError::Infeasible(e.to_string()),
            EnvError::InvalidInitialPlacement(_) | EnvError::MissingInitial(_) => {
                CliError::Placement(e.to_string())
            }
            EnvError::BadConfig(_) => CliError::Parse(e.to_string()),
            EnvError::Geom(g) => g.into(),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<PpoError> for CliError {
    fn from(e: PpoError) -> Self {
        match e {
            PpoError::NonFiniteLoss => CliError::Numeric(e.to_string()),
            PpoError::BadConfig(_) => CliError::Parse(e.to_string()),
        }
    }
}

impl From<PolicyError> for CliError {
    fn from(e: PolicyError) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl From<CheckpointError> for CliError {
    fn from(e: CheckpointError) -> Self {
        CliError::Parse(format!("checkpoint: {e}"))
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Env(e) => e.into(),
            TrainError::Ppo(e) => e.into(),
            TrainError::Policy(e) => e.into(),
        }
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        CliError::Other(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

// ---------------------------------------------------------------------------
// Command line surface
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "placekit",
    version,
    about = "Grid-based macro placement: greedy and learned refinement",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a Bookshelf bundle and print a summary.
    Parse(ParseArgs),
    /// Place all blocks from scratch with the greedy agent.
    Place(PlaceArgs),
    /// Refine an existing placement, one block per step.
    Regulate(RegulateArgs),
    /// Train a refinement policy; writes a checkpoint and learning curve.
    Train(TrainArgs),
    /// Score a placement file: wirelength, regularity, legality.
    Eval(EvalArgs),
    /// Sweep the wirelength/regularity blend and merge results into one CSV.
    Ablate(AblateArgs),
    /// Draw a placement as an SVG image.
    Render(RenderArgs),
}

/// Flags shared by every subcommand.
#[derive(Args)]
pub struct CommonArgs {
    /// `key = value` run-config file overlaying built-in defaults;
    /// explicit flags override both.
    #[arg(long, value_name = "FILE")]
    pub run_config: Option<PathBuf>,
    /// Collapse movable nodes with area strictly below this threshold.
    #[arg(long, value_name = "AREA")]
    pub macro_min_area: Option<f64>,
}

#[derive(Args)]
pub struct ParseArgs {
    /// Bookshelf `.aux` file.
    pub input: PathBuf,
    /// Directory for the summary and resolved config; stdout only if omitted.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args)]
pub struct PlaceArgs {
    /// Bookshelf `.aux` file.
    pub input: PathBuf,
    /// Wirelength weight in the blended objective, in [0, 1].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Grid resolution per axis.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Run seed (recorded in the config; the greedy agent is deterministic).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Block visit order: area-nets, area, or nets.
    #[arg(long)]
    pub order: Option<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args)]
pub struct RegulateArgs {
    /// Bookshelf `.aux` file.
    pub input: PathBuf,
    /// Initial layout: a `.pl` path, or `greedy` to build one.
    #[arg(long)]
    pub init: Option<String>,
    /// Decision source: a policy checkpoint path, or `greedy`.
    #[arg(long)]
    pub policy: Option<String>,
    /// Wirelength weight for the greedy policy, in [0, 1].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Grid resolution per axis.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Number of refinement sweeps over all blocks.
    #[arg(long)]
    pub passes: Option<usize>,
    /// Run seed (recorded in the config; refinement is deterministic).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Block visit order: area-nets, area, or nets.
    #[arg(long)]
    pub order: Option<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args)]
pub struct TrainArgs {
    /// Bookshelf `.aux` file (omit when using --synthetic).
    pub input: Option<PathBuf>,
    /// Generate the training instance instead: SEED,BLOCKS,NETS.
    #[arg(long, value_name = "SEED,K,N", conflicts_with = "input")]
    pub synthetic: Option<String>,
    /// Canvas width for --synthetic (default: 10 per grid cell).
    #[arg(long)]
    pub canvas_width: Option<f64>,
    /// Canvas height for --synthetic (default: 10 per grid cell).
    #[arg(long)]
    pub canvas_height: Option<f64>,
    /// Environment mode: regulate (refine an initial layout) or place.
    #[arg(long)]
    pub mode: Option<String>,
    /// Grid resolution per axis (must be a multiple of 8).
    #[arg(long)]
    pub grid: Option<usize>,
    /// Wirelength weight in the blended reward, in [0, 1].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Adam learning rate.
    #[arg(long)]
    pub lr: Option<f64>,
    /// Training episodes.
    #[arg(long)]
    pub episodes: Option<usize>,
    /// Optimization epochs per update.
    #[arg(long)]
    pub update_epochs: Option<usize>,
    /// Minibatch size.
    #[arg(long)]
    pub minibatch: Option<usize>,
    /// Rollout buffer capacity in transitions.
    #[arg(long)]
    pub buffer: Option<usize>,
    /// Surrogate clip range.
    #[arg(long)]
    pub clip: Option<f64>,
    /// Global gradient-norm ceiling.
    #[arg(long)]
    pub grad_clip: Option<f64>,
    /// Return discount per step.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Entropy bonus weight.
    #[arg(long)]
    pub entropy_coef: Option<f64>,
    /// Value loss weight.
    #[arg(long)]
    pub value_coef: Option<f64>,
    /// Episodes collected between updates.
    #[arg(long)]
    pub rollout_episodes: Option<usize>,
    /// Seed for initialization, action sampling, and shuffling.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Bookshelf `.aux` file.
    pub input: PathBuf,
    /// Placement `.pl` to score.
    pub placement: PathBuf,
    /// Directory for the metrics CSV and resolved config; stdout only if omitted.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args)]
pub struct AblateArgs {
    /// Bookshelf `.aux` file (omit when using --synthetic).
    pub input: Option<PathBuf>,
    /// Generate the instance instead: SEED,BLOCKS,NETS.
    #[arg(long, value_name = "SEED,K,N", conflicts_with = "input")]
    pub synthetic: Option<String>,
    /// Canvas width for --synthetic (default: 10 per grid cell).
    #[arg(long)]
    pub canvas_width: Option<f64>,
    /// Canvas height for --synthetic (default: 10 per grid cell).
    #[arg(long)]
    pub canvas_height: Option<f64>,
    /// Comma-separated blend weights to sweep.
    #[arg(long)]
    pub alphas: Option<String>,
    /// Training episodes per weight; 0 sweeps the greedy policy instead.
    #[arg(long)]
    pub episodes: Option<usize>,
    /// Refinement sweeps per weight when using the greedy policy.
    #[arg(long)]
    pub passes: Option<usize>,
    /// Grid resolution per axis.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Seed shared by every leg of the sweep.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args)]
pub struct RenderArgs {
    /// Bookshelf `.aux` file.
    pub input: PathBuf,
    /// Placement `.pl` to draw; blocks missing from it are skipped.
    pub placement: PathBuf,
    /// Draw grid lines at this resolution.
    #[arg(long)]
    pub grid_lines: Option<usize>,
    /// Output directory for `layout.svg`.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Parse(a) => ops::cmd_parse(a),
        Cmd::Place(a) => ops::cmd_place(a),
        Cmd::Regulate(a) => ops::cmd_regulate(a),
        Cmd::Train(a) => ops::cmd_train(a),
        Cmd::Eval(a) => ops::cmd_eval(a),
        Cmd::Ablate(a) => ops::cmd_ablate(a),
        Cmd::Render(a) => ops::cmd_render(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
