//! `codeprov`: the detection pipeline as one subcommand per stage.
//!
//! Exit codes: 0 on success, 1 when flags or inputs are invalid, 2 when the
//! work itself fails.

mod commands;
mod inputs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use codeprov_core::baselines::BaselineId;
use codeprov_core::classifier::{BackendKind, Hyperparams};
use codeprov_core::Provenance;

use inputs::Failure;

#[derive(Parser)]
#[command(name = "codeprov", version, about = "Detect machine-generated source code")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read a JSON-lines manifest and write a corpus snapshot.
    Ingest(IngestArgs),
    /// Apply a preprocessing configuration to every snippet of a corpus.
    Preprocess(PreprocessArgs),
    /// Partition a corpus into train, validation and test parts.
    Split(SplitArgs),
    /// Train a classifier under one configuration and persist it.
    Train(TrainArgs),
    /// Classify source files with a persisted model.
    Predict(PredictArgs),
    /// Score a persisted model on a corpus or one part of a split.
    Eval(EvalArgs),
    /// Train and score every dataset x configuration cell.
    Grid(GridArgs),
    /// Paired significance tests between two classifiers' predictions.
    Compare(CompareArgs),
    /// Render report files as CSV, markdown or JSON tables.
    Report(ReportArgs),
    /// Comparison against external detectors.
    #[command(subcommand)]
    Baseline(BaselineCommand),
}

#[derive(Args)]
struct CorpusArgs {
    /// Manifest (JSON lines) or corpus snapshot (`.json`).
    #[arg(long)]
    corpus: PathBuf,
    /// Overrides the provenance; manifests default to paired when every
    /// record has a pairing key.
    #[arg(long)]
    provenance: Option<Provenance>,
}

#[derive(Args)]
struct RuleArgs {
    /// Tab-separated `pairing_key<TAB>ClassName` file for C6-C8.
    #[arg(long)]
    rename_map: Option<PathBuf>,
    /// Extra first import segments treated as the project's own (`ch_*` allowed).
    #[arg(long = "project-prefix")]
    project_prefixes: Vec<String>,
}

#[derive(Args)]
struct SplitFlags {
    #[arg(long, default_value = "80:10:10")]
    ratios: String,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Disable per-class stratification.
    #[arg(long)]
    no_stratify: bool,
    /// Keep snippets sharing a pairing key together; defaults to on for paired corpora.
    #[arg(long)]
    pair_aware: Option<bool>,
}

#[derive(Args)]
struct BackendArgs {
    #[arg(long, default_value = "linear")]
    backend: BackendKind,
    /// Pre-trained encoder directory (config.json, tokenizer.json, model.safetensors).
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    warmup_fraction: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    max_len: Option<usize>,
}

impl BackendArgs {
    fn hyperparams(&self, seed: u64) -> Hyperparams {
        let d = Hyperparams::defaults_for(self.backend);
        Hyperparams {
            epochs: self.epochs.unwrap_or(d.epochs),
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
            warmup_fraction: self.warmup_fraction.unwrap_or(d.warmup_fraction),
            weight_decay: self.weight_decay.unwrap_or(d.weight_decay),
            max_len: self.max_len.unwrap_or(d.max_len),
            seed,
        }
    }
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Directory snippet paths are relative to; defaults to the manifest's.
    #[arg(long)]
    root: Option<PathBuf>,
    #[arg(long)]
    provenance: Option<Provenance>,
    /// Expected snippet counts, checked and reported.
    #[arg(long)]
    expect_human: Option<usize>,
    #[arg(long)]
    expect_chatgpt: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PreprocessArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    config: String,
    #[command(flatten)]
    rules: RuleArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SplitArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    split: SplitFlags,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    config: String,
    /// Split file from `split`; otherwise the corpus is split here.
    #[arg(long)]
    split_file: Option<PathBuf>,
    #[command(flatten)]
    split: SplitFlags,
    #[command(flatten)]
    rules: RuleArgs,
    #[command(flatten)]
    backend: BackendArgs,
    /// Model directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    /// Class name to rename to under configurations that rename classes.
    #[arg(long)]
    class_name: Option<String>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Restrict scoring to one part of this split.
    #[arg(long)]
    split_file: Option<PathBuf>,
    #[arg(long, default_value = "test")]
    part: codeprov_core::Part,
    #[command(flatten)]
    rules: RuleArgs,
    /// Report file; the report is printed either way.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-snippet predictions file, usable by `compare`.
    #[arg(long)]
    predictions: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    /// One dataset per flag, named by `name=path` or the file stem.
    #[arg(long = "corpus", required = true)]
    corpora: Vec<String>,
    #[arg(long)]
    provenance: Option<Provenance>,
    #[arg(long, value_delimiter = ',', default_value = "C1,C2,C3,C4,C5,C6,C7,C8")]
    configs: Vec<String>,
    #[command(flatten)]
    split: SplitFlags,
    #[command(flatten)]
    rules: RuleArgs,
    #[command(flatten)]
    backend: BackendArgs,
    /// Cells trained in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// `snippet_id,truth,pred_a,pred_b` file, as `label=path` or a bare path.
    #[arg(long)]
    csv: Vec<String>,
    /// Two prediction files written by `grid` or `eval`: `label=a.json,b.json`.
    #[arg(long)]
    pair: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Report files or directories of them.
    #[arg(long, required = true)]
    input: Vec<PathBuf>,
    #[arg(long, default_value = "md")]
    format: String,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum BaselineCommand {
    /// Draw a length-constrained, class-balanced comparison set.
    Select(SelectArgs),
    /// Query a detector over HTTP and record its answers to a fixture.
    Query(QueryArgs),
    /// Score recorded answers against the truth.
    Score(ScoreArgs),
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    baseline: BaselineId,
    #[arg(long)]
    per_class: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Exclusive lower bound on characters; defaults to the detector's.
    #[arg(long)]
    min_chars: Option<usize>,
    /// Inclusive upper bound on characters; defaults to the detector's.
    #[arg(long)]
    max_chars: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct QueryArgs {
    /// Selection written by `baseline select`.
    #[arg(long)]
    selection: PathBuf,
    #[arg(long)]
    endpoint: String,
    #[arg(long)]
    fixture: PathBuf,
    /// Environment variable holding the bearer token.
    #[arg(long)]
    token_env: Option<String>,
    #[arg(long, default_value_t = 1000)]
    min_interval_ms: u64,
    #[arg(long, default_value = "document")]
    text_field: String,
    /// JSON pointer to the answer text in a response.
    #[arg(long, default_value = "/answer")]
    answer_pointer: String,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    selection: PathBuf,
    #[arg(long)]
    baseline: BaselineId,
    #[arg(long)]
    fixture: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Ingest(a) => commands::ingest(a),
        Command::Preprocess(a) => commands::preprocess(a),
        Command::Split(a) => commands::split(a),
        Command::Train(a) => commands::train(a),
        Command::Predict(a) => commands::predict(a),
        Command::Eval(a) => commands::eval(a),
        Command::Grid(a) => commands::grid(a),
        Command::Compare(a) => commands::compare(a),
        Command::Report(a) => commands::report(a),
        Command::Baseline(BaselineCommand::Select(a)) => commands::baseline_select(a),
        Command::Baseline(BaselineCommand::Query(a)) => commands::baseline_query(a),
        Command::Baseline(BaselineCommand::Score(a)) => commands::baseline_score(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            match &failure {
                Failure::Invalid(message) => eprintln!("error: {message}"),
                Failure::Runtime(e) => eprintln!("error: {e:#}"),
            }
            ExitCode::from(failure.exit_code())
        }
    }
}
