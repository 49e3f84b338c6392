//! `evidet`: generate synthetic corpora, train the evidential predictor,
//! run streaming detection and score it.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime error.
//! Log verbosity is read from `EVIDET_LOG` (e.g. `EVIDET_LOG=debug`).

mod commands;
mod config;
mod corpus;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::RuleKind;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<evidet::Error> for CliError {
    fn from(e: evidet::Error) -> Self {
        match e {
            evidet::Error::Config { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "evidet", version, about = "Evidential sound-event early detection")]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Top-level seed; gen and train derive their own streams from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus with strong labels.
    Gen(GenArgs),
    /// Train the predictor on the training split of a corpus.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        /// Continue from this checkpoint.
        #[arg(long)]
        resume: Option<PathBuf>,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Stream clips through the detector and write a detection log.
    Detect {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = SplitArg::Eval)]
        split: SplitArg,
        /// Leading fraction of the manifest that forms the training split.
        #[arg(long)]
        train_fraction: Option<f64>,
        #[command(flatten)]
        detect: DetectArgs,
    },
    /// Score a detection log against the corpus annotations.
    Eval {
        #[arg(long)]
        corpus: PathBuf,
        /// Output directory of a `detect` run.
        #[arg(long)]
        detections: PathBuf,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Sweep the decision threshold or the forward context.
    Sweep {
        #[arg(long, value_enum)]
        param: SweepParam,
        #[arg(long)]
        corpus: PathBuf,
        /// Model to sweep (vacuity), or one shared model for every n (backtrack).
        #[arg(long)]
        model: Option<PathBuf>,
        /// Backtrack: one checkpoint per n, each evaluated at its trained n.
        #[arg(long, num_args = 1.., value_delimiter = ',')]
        models: Vec<PathBuf>,
        /// Comma-separated grid replacing the configured one.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        grid: Vec<f64>,
        #[command(flatten)]
        detect: DetectArgs,
        #[command(flatten)]
        eval: EvalArgs,
        #[command(flatten)]
        train: TrainArgs,
    },
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    clips: Option<usize>,
    #[arg(long)]
    num_classes: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    snr_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    snr_max: Option<f64>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    /// Backward context m used for training.
    #[arg(long)]
    train_context: Option<usize>,
    /// Forward context n used for training.
    #[arg(long)]
    train_forward: Option<usize>,
    /// Leading fraction of the manifest used for training.
    #[arg(long)]
    train_fraction: Option<f64>,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long, value_enum)]
    rule: Option<RuleKind>,
    #[arg(long)]
    threshold: Option<f64>,
    /// Backward context m (defaults to the model's).
    #[arg(long)]
    context: Option<usize>,
    /// Forward context n (defaults to the model's).
    #[arg(long)]
    forward: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    /// Early tolerance L in seconds (non-positive).
    #[arg(long, allow_hyphen_values = true)]
    tolerance: Option<f64>,
    /// Require the first positive inside [onset, offset].
    #[arg(long)]
    strict_eq8: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SplitArg {
    Train,
    Eval,
    All,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepParam {
    Vacuity,
    Backtrack,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("EVIDET_LOG", "info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::Usage(_) => 1,
                CliError::Runtime(_) => 2,
            })
        }
    }
}
