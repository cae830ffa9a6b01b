//! `advkit` — train small dense classifiers, craft gradient attacks on
//! them, harden them with adversarial training, measure cross-model
//! transfer, and score the findings. One JSON config per run; identical
//! configs yield byte-identical outputs.

mod commands;
mod config;
mod error;
mod outputs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{load_config, Loaded, Overrides};
use error::CliError;

#[derive(Parser)]
#[command(name = "advkit", version, about = "Adversarial-robustness workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's out_dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Training-seed override for the model section.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated epsilon sweep override for the attack section.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    eps: Option<Vec<f64>>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a classifier; writes weights.json and history.csv.
    Train(RunArgs),
    /// Attack the trained model; writes robustness.csv or attack_report.json.
    Attack(RunArgs),
    /// Fit with adversarially-mixed batches; writes weights.json and history.csv.
    AdvTrain(RunArgs),
    /// Train a model zoo and write the cross-model transfer matrix.
    Transfer(RunArgs),
    /// Turn attack reports into scored findings; writes report.md and report.json.
    Score(RunArgs),
    /// Run the built-in numeric self-checks.
    Selftest,
}

fn load(args: &RunArgs) -> Result<Loaded, CliError> {
    load_config(
        &args.config,
        Overrides {
            out: args.out.clone(),
            seed: args.seed,
            eps: args.eps.clone(),
        },
    )
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Train(args) => commands::run_train(&load(args)?),
        Command::Attack(args) => commands::run_attack(&load(args)?),
        Command::AdvTrain(args) => commands::run_adv_train(&load(args)?),
        Command::Transfer(args) => commands::run_transfer(&load(args)?),
        Command::Score(args) => commands::run_score(&load(args)?),
        Command::Selftest => commands::run_selftest(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version land here with a zero exit code.
            if e.exit_code() == 0 {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let msg: String = e.to_string();
            let first = msg.lines().find(|l| !l.trim().is_empty()).unwrap_or("bad arguments");
            eprintln!("{}", first.trim());
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.one_line());
            ExitCode::from(e.exit_code())
        }
    }
}
