mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use error::{CliError, CliResult, EXIT_USAGE};

/// Similarity-graph attention models for ordinal hallucination detection.
#[derive(Debug, Parser)]
#[command(name = "halograph", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a labeled Gaussian-cluster corpus.
    Synth(SynthArgs),
    /// Reassign train/val/test splits at random.
    Split(SplitArgs),
    /// Build the cosine-threshold graph over a corpus.
    BuildGraph(BuildGraphArgs),
    /// Train the attention model, optionally after contrastive pretraining.
    Train(TrainArgs),
    /// Score one split with a checkpoint.
    Evaluate(EvaluateArgs),
    /// Predict labels for new statements appended to a labeled graph.
    Recover(RecoverArgs),
    /// Train or run a graph-free baseline and report on a split.
    Baseline(BaselineArgs),
    /// Print degree statistics of a graph.
    Stats(StatsArgs),
}

/// A corpus as a manifest, or as an embedding file plus a labels file.
#[derive(Debug, Args)]
struct CorpusArgs {
    /// Corpus manifest (JSON) naming the embedding and labels files.
    #[arg(long, conflicts_with_all = ["embeddings", "labels"])]
    corpus: Option<PathBuf>,
    /// Embedding file (HGE1).
    #[arg(long, requires = "labels")]
    embeddings: Option<PathBuf>,
    /// Labels file (JSON lines).
    #[arg(long, requires = "embeddings")]
    labels: Option<PathBuf>,
    /// Number of ordinal classes when no manifest is given.
    #[arg(long, default_value_t = 4)]
    num_classes: usize,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Output prefix; writes `.emb`, `.labels.jsonl` and `.manifest.json`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 800)]
    nodes: usize,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    #[arg(long, default_value_t = 4)]
    classes: usize,
    /// Noise standard deviation per direction (default: generator default).
    #[arg(long)]
    std: Option<f64>,
    /// Multiplies the noise standard deviation.
    #[arg(long, default_value_t = 1.0)]
    noise_scale: f64,
    /// Angle in radians between consecutive class centers.
    #[arg(long)]
    center_angle: Option<f64>,
    /// Number of noise directions.
    #[arg(long)]
    noise_rank: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct SplitArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Output prefix for the re-split corpus.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.70)]
    train: f64,
    #[arg(long, default_value_t = 0.15)]
    val: f64,
    #[arg(long, default_value_t = 0.15)]
    test: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Split each label separately.
    #[arg(long)]
    stratified: bool,
}

#[derive(Debug, Args)]
struct BuildGraphArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Strict cosine threshold in (-1, 1).
    #[arg(long, default_value_t = halograph::graph::DEFAULT_TAU)]
    tau: f32,
    #[arg(long, default_value_t = halograph::graph::DEFAULT_BLOCK_SIZE)]
    block_size: usize,
    /// Graph file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    graph: PathBuf,
    /// Checkpoint to write; history and manifest go beside it.
    #[arg(long)]
    out: PathBuf,
    /// TOML file with `seed`, `with_cl`, `[gat]` and `[cl]` settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    with_cl: bool,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    decode_rule: Option<DecodeRuleArg>,
    #[arg(long)]
    cl_epochs: Option<usize>,
    #[arg(long)]
    cl_batch: Option<usize>,
    #[arg(long)]
    cl_temp: Option<f64>,
    #[arg(long)]
    cl_lr: Option<f64>,
    #[arg(long)]
    cl_weight_decay: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DecodeRuleArg {
    ConsecutiveScan,
    CountPositives,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PhaseArg {
    Val,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    ckpt: PathBuf,
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Required for attention checkpoints.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = PhaseArg::Test)]
    phase: PhaseArg,
    /// Format printed on stdout.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Also write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RecoverArgs {
    #[arg(long)]
    ckpt: PathBuf,
    /// Manifest of the labeled base corpus.
    #[arg(long)]
    base_corpus: PathBuf,
    /// Graph over the base corpus.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Embeddings of the statements to label (HGE1).
    #[arg(long)]
    new_embeddings: PathBuf,
    /// Predictions as JSON lines.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Knn,
    MlpA,
    MlpQa,
}

#[derive(Debug, Args)]
struct BaselineArgs {
    #[arg(long, value_enum)]
    method: Method,
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Query embeddings aligned with the corpus rows (mlp-qa only).
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long, default_value_t = halograph::model::DEFAULT_K)]
    k: usize,
    #[arg(long, default_value_t = halograph::training::DEFAULT_EPOCHS)]
    epochs: usize,
    #[arg(long, default_value_t = halograph::training::DEFAULT_LR)]
    lr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = PhaseArg::Test)]
    phase: PhaseArg,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Also write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the trained MLP checkpoint here.
    #[arg(long)]
    ckpt_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    json: bool,
}

fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var("HALOGRAPH_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("HALOGRAPH_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot configure {threads} threads: {e}")))
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Split(a) => commands::split(a),
        Command::BuildGraph(a) => commands::build_graph(a),
        Command::Train(a) => commands::train(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Recover(a) => commands::recover(a),
        Command::Baseline(a) => commands::baseline(a),
        Command::Stats(a) => commands::stats(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn train_args(extra: &[&str]) -> TrainArgs {
        let mut argv = vec!["halograph", "train", "--corpus", "c.json", "--graph", "g", "--out", "m"];
        argv.extend_from_slice(extra);
        match Cli::try_parse_from(argv).unwrap().command {
            Command::Train(a) => a,
            other => panic!("parsed {other:?}"),
        }
    }

    #[test]
    fn train_defaults() {
        let c = commands::train_config(&train_args(&[])).unwrap();
        assert_eq!((c.gat.epochs, c.gat.lr, c.with_cl), (500, 1e-3, false));
        let c = commands::train_config(&train_args(&["--with-cl"])).unwrap();
        assert!(c.with_cl);
        assert_eq!((c.cl.epochs, c.cl.batch_size, c.cl.temperature), (1000, 256, 0.07));
    }

    #[test]
    fn flags_override_defaults() {
        let c = commands::train_config(&train_args(&[
            "--epochs",
            "7",
            "--lr",
            "0.01",
            "--seed",
            "3",
            "--cl-batch",
            "64",
            "--cl-temp",
            "0.1",
        ]))
        .unwrap();
        assert_eq!(
            (c.gat.epochs, c.gat.lr, c.seed, c.cl.batch_size, c.cl.temperature),
            (7, 0.01, 3, 64, 0.1)
        );
        assert!(commands::train_config(&train_args(&["--epochs", "0"])).is_err());
    }

    #[test]
    fn graph_defaults() {
        let Command::BuildGraph(a) =
            Cli::try_parse_from(["halograph", "build-graph", "--corpus", "c.json", "--out", "g"])
                .unwrap()
                .command
        else {
            panic!("wrong subcommand");
        };
        assert_eq!((a.tau, a.block_size), (0.85, 256));
    }

    #[test]
    fn corpus_sources_are_exclusive() {
        let argv = ["halograph", "stats", "--graph", "g"];
        assert!(Cli::try_parse_from(argv).is_ok());
        let both = [
            "halograph",
            "build-graph",
            "--corpus",
            "c",
            "--embeddings",
            "e",
            "--labels",
            "l",
            "--out",
            "g",
        ];
        assert!(Cli::try_parse_from(both).is_err());
        let half = ["halograph", "build-graph", "--embeddings", "e", "--out", "g"];
        assert!(Cli::try_parse_from(half).is_err());
    }
}
