use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use diffsel::{ErrorCategory, Metric, Strategy};

mod commands;

#[derive(Parser)]
#[command(name = "diffsel", version, about = "Select instruction-tuning data by model-state differences")]
struct Cli {
    /// Directory for outputs.
    #[arg(long, global = true, env = "DIFFSEL_OUT_DIR", default_value = "out")]
    out_dir: PathBuf,

    /// Print a digest of every file the command wrote.
    #[arg(long, global = true)]
    print_digest: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score a dataset under the base and warmup-calibrated states.
    Score(ScoreArgs),
    /// Difference two score files and select a subset.
    Select(SelectArgs),
    /// Run or resume the iterative selection loop.
    Iterate(IterateArgs),
    /// Histogram, correlation and overlap reports.
    Analyze {
        #[command(subcommand)]
        report: AnalyzeCommand,
    },
    /// Write a synthetic dataset and base corpus for trying things out.
    Generate(GenerateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScorerKind {
    Builtin,
    External,
}

#[derive(Args, Clone)]
struct RatioArgs {
    /// Warmup ratio.
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Selection ratio.
    #[arg(long, default_value_t = 0.1)]
    beta: f64,
    /// Fraction rejected from each NLL-difference tail; must be below 0.5.
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    #[arg(long, default_value = "diff-entropy-min", value_parser = parse_strategy)]
    strategy: Strategy,
    /// Seed for every random choice.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Clone)]
struct NGramArgs {
    #[arg(long, default_value_t = diffsel::ngram::DEFAULT_ORDER)]
    order: usize,
    #[arg(long, default_value_t = diffsel::ngram::DEFAULT_LAMBDA)]
    lambda: f64,
    #[arg(long, default_value_t = diffsel::ngram::DEFAULT_BLEND_WEIGHT)]
    blend_weight: f64,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum, default_value = "builtin")]
    scorer: ScorerKind,
    /// Plain-text corpus (one text per line) that trains the base model.
    #[arg(long)]
    base_corpus: Option<PathBuf>,
    #[command(flatten)]
    ratios: RatioArgs,
    #[command(flatten)]
    ngram: NGramArgs,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Defaults to <out-dir>/scores_base.jsonl.
    #[arg(long)]
    base_scores: Option<PathBuf>,
    /// Defaults to <out-dir>/scores_inst.jsonl.
    #[arg(long)]
    inst_scores: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    iteration: usize,
    #[command(flatten)]
    ratios: RatioArgs,
}

#[derive(Args)]
struct IterateArgs {
    #[arg(long, required_unless_present = "resume")]
    dataset: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "builtin")]
    scorer: ScorerKind,
    #[arg(long)]
    base_corpus: Option<PathBuf>,
    #[arg(long)]
    base_scores: Option<PathBuf>,
    /// Scores of the warmup-calibrated state (model id `inst_k0`).
    #[arg(long)]
    inst_scores: Option<PathBuf>,
    /// Number of refinement iterations.
    #[arg(short = 'K', long = "iterations", default_value_t = 1)]
    iterations: usize,
    /// Defaults to <out-dir>/state.
    #[arg(long)]
    state_dir: Option<PathBuf>,
    /// Resume an external-mode run kept in this state directory.
    #[arg(long, conflicts_with_all = ["base_corpus", "base_scores", "inst_scores", "state_dir"], requires = "scores")]
    resume: Option<PathBuf>,
    /// Scores of the calibrated state the last manifest asked for.
    #[arg(long, requires = "resume")]
    scores: Option<PathBuf>,
    #[command(flatten)]
    ratios: RatioArgs,
    #[command(flatten)]
    ngram: NGramArgs,
}

#[derive(Subcommand)]
enum AnalyzeCommand {
    /// Histogram of one metric, as CSV and SVG.
    Hist {
        /// Defaults to <out-dir>/diffs.jsonl.
        #[arg(long)]
        diffs: Option<PathBuf>,
        #[arg(long, default_value = "delta-h", value_parser = parse_metric)]
        metric: Metric,
        #[arg(long, default_value_t = 50)]
        bins: usize,
    },
    /// Pearson and Spearman matrices, as CSV.
    Corr {
        #[arg(long)]
        diffs: Option<PathBuf>,
        /// Comma-separated metric names; all metrics by default.
        #[arg(long, value_delimiter = ',', value_parser = parse_metric)]
        metrics: Vec<Metric>,
    },
    /// Overlap between two selection files.
    Overlap { a: PathBuf, b: PathBuf },
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 500)]
    base_lines: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e: diffsel::Error| e.to_string())
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    s.parse().map_err(|e: diffsel::Error| e.to_string())
}

/// Failure of a command, with the exit code it maps to.
#[derive(Debug)]
enum CliError {
    Usage(String),
    Core(diffsel::Error),
}

impl From<diffsel::Error> for CliError {
    fn from(e: diffsel::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) => match e.category() {
                ErrorCategory::Config => 2,
                ErrorCategory::Data => 3,
                ErrorCategory::Internal => 4,
            },
        }
    }

    fn report(&self) {
        match self {
            CliError::Usage(msg) => eprintln!("error[ConfigError]: {msg}"),
            CliError::Core(e) => eprintln!("error[{}]: {e}", e.name()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(written) => {
            if cli.print_digest {
                println!("run digest: {}", commands::run_digest(&written));
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            e.report();
            ExitCode::from(e.exit_code())
        }
    }
}
