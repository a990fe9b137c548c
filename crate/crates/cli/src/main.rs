mod commands;
mod config;
mod error;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::{CliError, CliResult};

/// Fractional wavelet scattering features and PCA texture classification.
#[derive(Parser, Debug)]
#[command(name = "frscat", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the Morlet bank and report its frame bounds.
    Filterbank(commands::filterbank::Args),
    /// Scatter one image and write every coefficient map.
    Scatter(commands::scatter::Args),
    /// Cut labeled patches and assemble the feature tensor.
    Features(commands::features::Args),
    /// Fit per-class PCA models on one order slice of a tensor.
    Train(commands::model::TrainArgs),
    /// Label tensor signals with trained models.
    Classify(commands::model::ClassifyArgs),
    /// Run the repeated split/train/test protocol over every order setting.
    Evaluate(commands::model::EvaluateArgs),
    /// Score instance segmentations against ground truth.
    EvaluateMasks(commands::masks::Args),
    /// Rank methods per score column and sum the ranks.
    Rank(commands::rank::Args),
    /// Generate the synthetic texture fixtures.
    Synth(commands::synth::Args),
}

/// Sizes the global rayon pool from `FRSC_THREADS` when it is set.
fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("FRSC_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("FRSC_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::Filterbank(a) => commands::filterbank::run(&a),
        Command::Scatter(a) => commands::scatter::run(&a),
        Command::Features(a) => commands::features::run(&a),
        Command::Train(a) => commands::model::train(&a),
        Command::Classify(a) => commands::model::classify(&a),
        Command::Evaluate(a) => commands::model::evaluate(&a),
        Command::EvaluateMasks(a) => commands::masks::run(&a),
        Command::Rank(a) => commands::rank::run(&a),
        Command::Synth(a) => commands::synth::run(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("frscat: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
