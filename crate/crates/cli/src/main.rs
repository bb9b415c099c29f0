//! `hybrid`: data generation, training, evaluation and the experiment
//! pipelines of the hybrid-loss crate.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] hybrid_loss::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hybrid", version, about = "Hybrid log/hinge loss experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    Synth {
        #[command(subcommand)]
        kind: SynthKind,
    },
    /// Train a model on a CSV or CONLL file.
    Train(TrainArgs),
    /// Score a saved model on a CSV or CONLL file.
    Eval(EvalArgs),
    /// Training error against the number of classes on non-dominant data.
    SweepNondominant(NondominantArgs),
    /// Test accuracy over the mixed dominant/non-dominant grid.
    SweepMixed(MixedArgs),
    /// Chunking experiment on a synthetic tagged corpus.
    Chunking(ChunkingArgs),
    /// Alpha threshold for a label distribution, checked by the simplex oracle.
    ConsistencyCheck(ConsistencyArgs),
    /// Sorted gold and Viterbi sequence probabilities of a chain model.
    Dominance(DominanceArgs),
    /// PAC-Bayes bound for a saved model on its training data.
    Bound(BoundArgs),
}

#[derive(Debug, Subcommand)]
enum SynthKind {
    /// One observation with a non-dominant label distribution.
    Nondominant {
        #[arg(long, default_value_t = 5)]
        labels: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0.46)]
        top_prob: f64,
        #[arg(long, value_enum, default_value_t = TopLabelArg::Last)]
        top_label: TopLabelArg,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Gaussian clusters mixed with a constant non-dominant point.
    Mixed {
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        samples: usize,
        #[arg(long, default_value_t = 1000)]
        held_out: usize,
        #[arg(long)]
        seed: u64,
        /// Receives train.csv, validation.csv and test.csv.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// BIO-tagged sentences from a hidden Markov model.
    Chunk {
        #[arg(long, default_value_t = 1000)]
        sentences: usize,
        #[arg(long, default_value_t = 0.5)]
        ambiguity: f64,
        #[arg(long)]
        seed: u64,
        /// Also writes a `.vocab` sidecar next to this file.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TopLabelArg {
    First,
    Last,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LossArg {
    Log,
    Hinge,
    Hybrid,
}

#[derive(Debug, Args)]
struct OptimArgs {
    #[arg(long, default_value_t = 500)]
    max_iterations: usize,
    #[arg(long, default_value_t = 1e-6)]
    gradient_tolerance: f64,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// `.csv` for flat data, anything else is read as CONLL.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    loss: LossArg,
    /// Required for the hybrid loss.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    lambda: f64,
    /// Add a constant bias input (flat data only).
    #[arg(long)]
    bias: bool,
    /// Standardize flat inputs on the training data while fitting. Implies
    /// `--bias`; the saved weights apply to raw inputs.
    #[arg(long)]
    standardize: bool,
    /// Number of labels for flat data; defaults to the largest label plus one.
    #[arg(long)]
    labels: Option<usize>,
    #[command(flatten)]
    optim: OptimArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Check the model's fingerprint against this training file first.
    #[arg(long)]
    train_data: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct NondominantArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 0.46)]
    top_prob: f64,
    #[arg(long, value_enum, default_value_t = TopLabelArg::Last)]
    top_label: TopLabelArg,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 1e-4)]
    lambda: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [3usize, 4, 5, 6, 7, 8, 9, 10])]
    labels: Vec<usize>,
    /// Defaults to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct MixedArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, value_delimiter = ',')]
    rhos: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long, default_value_t = 1000)]
    held_out: usize,
    #[command(flatten)]
    grid: GridArgs,
    /// Receives mixed.csv and pairwise.csv.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct ChunkingArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    sentences: usize,
    #[arg(long, default_value_t = 0.5)]
    ambiguity: f64,
    #[arg(long, value_delimiter = ',')]
    portions: Option<Vec<f64>>,
    #[command(flatten)]
    grid: GridArgs,
    /// Receives metrics.csv, selection.csv, dominance.csv and non_dominant.csv.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct ConsistencyArgs {
    /// Label probabilities, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    q: Vec<f64>,
    /// Also run the simplex oracle at this alpha.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 100)]
    resolution: usize,
}

#[derive(Debug, Args)]
struct DominanceArgs {
    /// Chain model saved by `train`.
    #[arg(long)]
    model: PathBuf,
    /// CONLL corpus with its `.vocab` sidecar.
    #[arg(long)]
    data: PathBuf,
}

#[derive(Debug, Args)]
struct BoundArgs {
    #[arg(long)]
    model: PathBuf,
    /// The data the model was trained on.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long)]
    seed: u64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
