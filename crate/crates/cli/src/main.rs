//! `imrl`: train, evaluate, simulate, report and inspect.
//!
//! Exit status: 0 ok, 2 usage or configuration, 3 IO, 4 corrupt artifact.

mod eval;
mod failure;
mod inspect;
mod report;
mod settings;
mod simulate;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use imrl::evalkit::Policy;

use failure::Failure;

#[derive(Debug, Parser)]
#[command(name = "imrl", version, about = "Intrinsically motivated social interaction agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a predictor and Q network; writes checkpoints, log and metrics.
    Train(TrainArgs),
    /// Evaluate a trained run against random and oracle policies.
    Eval(EvalArgs),
    /// Render a seeded rollout as graymap images plus per-step actions.
    Simulate(SimulateArgs),
    /// Merge report.csv files of several runs.
    Report(ReportArgs),
    /// Describe a run, checkpoint, transition log or report.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// Config file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = settings::parse_pair)]
    set: Vec<(String, String)>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    episodes: Option<u64>,
    /// Interaction steps per episode.
    #[arg(long)]
    steps: Option<u64>,
    /// Reward preset.
    #[arg(long)]
    reward: Option<String>,
    /// Network preset.
    #[arg(long)]
    arch: Option<String>,
}

fn parse_policy(s: &str) -> Result<Policy, String> {
    s.parse()
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Run directory written by `train`.
    #[arg(long)]
    run: PathBuf,
    /// Config file; defaults to the run's config.cfg.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = settings::parse_pair)]
    set: Vec<(String, String)>,
    /// Policies to evaluate, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "model,random,oracle", value_parser = parse_policy)]
    policy: Vec<Policy>,
    /// Steps per rollout.
    #[arg(long, default_value_t = 600)]
    steps: usize,
    /// World seeds, comma separated; must differ from the training episodes'.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    seeds: Vec<u64>,
    /// Reward preset used for scoring; defaults to the run's.
    #[arg(long)]
    reward: Option<String>,
    /// Where report.csv and report.txt go; defaults to the run directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 50)]
    steps: usize,
    #[arg(long)]
    out: PathBuf,
    /// Run directory whose agent picks the actions.
    #[arg(long)]
    run: Option<PathBuf>,
    /// Acting policy; `model` when a run is given, otherwise `oracle`.
    #[arg(long, value_parser = parse_policy)]
    policy: Option<Policy>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Run directories holding report.csv.
    #[arg(required = true)]
    runs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Policy summarized in summary.csv, or `all`.
    #[arg(long, default_value = "model")]
    policy: String,
}

#[derive(Debug, Args)]
struct InspectArgs {
    path: PathBuf,
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Train(a) => train::run(a),
        Command::Eval(a) => eval::run(a),
        Command::Simulate(a) => simulate::run(a),
        Command::Report(a) => report::run(a),
        Command::Inspect(a) => inspect::run(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}
