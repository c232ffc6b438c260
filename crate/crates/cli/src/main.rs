//! `mvrkm` command-line front end.
//!
//! Exit codes: 0 success, 1 computation error (or a failed equivalence
//! check in `compare`), 2 invalid configuration or input, 3 refused
//! overwrite of an existing output.

mod commands;
mod compare;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use mvrkm::training::Algorithm;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Compute(#[from] mvrkm::Error),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("refusing to overwrite {} (pass --force to replace it)", .0.display())]
    Exists(PathBuf),
    #[error("equivalence check failed: {0}")]
    NotEquivalent(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Compute(_) | CliError::Io(_) | CliError::NotEquivalent(_) => 1,
            CliError::Config(_) | CliError::Input(_) => 2,
            CliError::Exists(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "mvrkm", version, about = "Primal-dual multi-view kernel PCA for time-series forecasting")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one model and write model.json, report.json and components.csv.
    Train(TrainArgs),
    /// Recursive multi-step forecast from a saved model.
    Forecast(ForecastArgs),
    /// Train several algorithms on one config and check that they agree.
    Compare(CompareArgs),
    /// Write a synthetic series, one value per line.
    GenData(GenDataArgs),
    /// Suggest a training algorithm for a problem shape.
    Recommend(RecommendArgs),
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Experiment config (JSON). Without it the built-in sine experiment runs.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed of the Stiefel starting point; overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Rotate Stiefel solutions to the eigenbasis of Γ′.
    #[arg(long, value_name = "BOOL")]
    rotate: Option<bool>,
    /// Replace existing output files.
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Training algorithm; overrides `algorithm` from the config.
    #[arg(long, value_parser = parse_algorithm)]
    algorithm: Option<Algorithm>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("window").required(true).args(["config", "series"])))]
struct ForecastArgs {
    /// Model file written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// Seed the forecast from the config's training split; its test split
    /// becomes the truth column.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed the forecast from the last values of this series file.
    #[arg(long)]
    series: Option<PathBuf>,
    /// Number of steps; defaults to the config's horizon.
    #[arg(long)]
    horizon: Option<usize>,
    /// Output directory for forecast.csv.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Comma-separated algorithms to compare (at least two).
    #[arg(long, value_delimiter = ',', value_parser = parse_algorithm,
          default_value = "primal-eig,dual-eig,primal-stiefel,dual-stiefel")]
    algorithms: Vec<Algorithm>,
    /// Forecast horizon; overrides the config.
    #[arg(long)]
    horizon: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DataKind {
    Sine,
    Logistic,
}

#[derive(Debug, Args)]
struct GenDataArgs {
    #[arg(long, value_enum)]
    kind: DataKind,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Number of values.
    #[arg(long, default_value_t = 500)]
    length: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,0.2")]
    amplitudes: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "100,2000")]
    frequencies: Vec<f64>,
    #[arg(long, default_value_t = 1e4)]
    sample_rate: f64,
    /// Logistic map growth rate.
    #[arg(long, default_value_t = 3.9)]
    r: f64,
    #[arg(long, default_value_t = 0.3)]
    x0: f64,
    #[arg(long, default_value_t = 500)]
    burn_in: usize,
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct RecommendArgs {
    /// Number of training samples.
    #[arg(long)]
    n: usize,
    /// Total feature dimension over all views.
    #[arg(long = "d-f")]
    d_f: usize,
    /// Whether every view has an explicit (finite) feature map.
    #[arg(long, value_name = "BOOL", default_value_t = true, action = ArgAction::Set)]
    explicit: bool,
    /// Feature or pre-image maps have trainable parameters.
    #[arg(long)]
    parametric: bool,
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse::<Algorithm>().map_err(|e| e.to_string())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train(args) => commands::train(args),
        Command::Forecast(args) => commands::forecast(args),
        Command::Compare(args) => commands::compare(args),
        Command::GenData(args) => commands::gen_data(args),
        Command::Recommend(args) => commands::recommend(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
