use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod manifest;

/// Exit 1: some work failed or produced nothing. Exit 2: bad input.
#[derive(Debug)]
pub enum Failure {
    Partial(String),
    Usage(String),
}

impl From<bvr_core::Error> for Failure {
    fn from(e: bvr_core::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

pub type CmdResult = Result<(), Failure>;

#[derive(Parser)]
#[command(name = "bvr", version, about = "BVR engagement simulation and outcome prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the default 17-parameter sampling plan as JSON.
    Plan(PlanArgs),
    /// Sample scenarios and run the simulations, one event log per run.
    Simulate(SimulateArgs),
    /// Extract engagements from a log directory into an encoded CSV.
    Dataset(DatasetArgs),
    /// Grid-search, refit and evaluate a boosted-tree model.
    Train(TrainArgs),
    /// Score encoded CSV rows or raw engagement states.
    Predict(PredictArgs),
    /// Run the HTTP inference service.
    Serve(ServeArgs),
}

#[derive(Args)]
pub struct PlanArgs {
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Plan file; the default plan when omitted.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Scenario count when no plan file is given.
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    /// Overrides the plan's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Scenario template (CAP point, spacing, sim constants) as JSON.
    #[arg(long)]
    pub template: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct DatasetArgs {
    /// Directory written by `bvr simulate`.
    #[arg(long)]
    pub logs: PathBuf,
    /// CSV path; stats go next to it as `<stem>.stats.json`.
    #[arg(long)]
    pub out: PathBuf,
    /// Keep only each agent's first commit per run.
    #[arg(long)]
    pub first_episode_only: bool,
    /// Keep engagements cut short by the end of the run or the agent's death.
    #[arg(long)]
    pub include_truncated: bool,
}

#[derive(Args)]
pub struct TrainArgs {
    /// Encoded CSV from `bvr dataset`.
    #[arg(long)]
    pub data: PathBuf,
    /// `full`, `quick`, or a JSON grid file.
    #[arg(long, default_value = "full")]
    pub grid: String,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Evaluate at most this many grid points, drawn uniformly.
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Model artifact path.
    #[arg(long)]
    pub out: PathBuf,
    /// Report path; defaults to `<out stem>.report.json`.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Timestamp stored in the model metadata. Left empty by default so
    /// reruns are byte-identical.
    #[arg(long)]
    pub trained_at: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Encoded CSV; a `target` column is ignored if present.
    #[arg(long, conflicts_with = "state", required_unless_present = "state")]
    pub data: Option<PathBuf>,
    /// Raw engagement state (or array of states) as JSON; `-` reads stdin.
    #[arg(long)]
    pub state: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, env = "SERVICE_ADDR", default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    /// Allowed browser origin; repeatable, `*` for any.
    #[arg(long = "cors-origin", value_delimiter = ',')]
    pub cors_origins: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Plan(a) => commands::plan(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Dataset(a) => commands::dataset(a),
        Command::Train(a) => commands::train(a),
        Command::Predict(a) => commands::predict(a),
        Command::Serve(a) => commands::serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Partial(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
