//! The `tipa` command line.
//!
//! Exit codes: 0 on success, 1 for usage errors (bad flags, missing input
//! files, unreadable config), 2 for data errors (malformed or inconsistent
//! input content).

mod commands;
mod config;
mod manifest;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::csc::CscError;
use crate::dataset::{DatasetError, Order, SamplingRatio, DEFAULT_MAX_TOKEN_LENGTH, DEFAULT_SEED};
use crate::metrics::MetricsError;
use crate::tokenizer::{TokenizerError, VocabFormat};

pub use manifest::{Artifact, Manifest};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

macro_rules! data_error_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Data(e.to_string())
            }
        }
    )*};
}
data_error_from!(TokenizerError, DatasetError, CscError, MetricsError, std::io::Error, serde_json::Error);

#[derive(Debug, Parser)]
#[command(name = "tipa", version, about = "Token-internal position datasets and position-based CSC scoring")]
pub struct Cli {
    /// JSON file whose keys mirror long flag names; explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Write a JSON run record (inputs, flags, seed, digests).
    #[arg(long, global = true, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    JsonMap,
    PlainLines,
}

impl From<FormatArg> for VocabFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::JsonMap => VocabFormat::JsonMap,
            FormatArg::PlainLines => VocabFormat::PlainLines,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum OrderArg {
    #[default]
    Reverse,
    Forward,
}

impl From<OrderArg> for Order {
    fn from(o: OrderArg) -> Self {
        match o {
            OrderArg::Reverse => Order::Reverse,
            OrderArg::Forward => Order::Forward,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CorpusFormat {
    /// One sentence per line.
    Lines,
    /// Pair corpus (TSV or JSONL); the source side is used.
    Pairs,
}

#[derive(Debug, Clone, Args)]
pub struct VocabArgs {
    /// Vocabulary file.
    #[arg(long, value_name = "FILE")]
    pub vocab: PathBuf,
    #[arg(long, value_enum, default_value = "json-map")]
    pub vocab_format: FormatArg,
    /// Surfaces use the byte-level BPE alphabet.
    #[arg(long)]
    pub byte_level: bool,
    /// Merges file ("left right" per line).
    #[arg(long, value_name = "FILE")]
    pub merges: Option<PathBuf>,
    /// Id emitted for atomic units missing from the vocabulary (default: max id + 1).
    #[arg(long)]
    pub unknown_id: Option<u32>,
}

#[derive(Debug, Clone, Args)]
pub struct GenTipaArgs {
    #[command(flatten)]
    pub vocab: VocabArgs,
    #[arg(long, value_enum, default_value = "reverse")]
    pub order: OrderArg,
    #[arg(long, default_value_t = 1)]
    pub min_len: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_TOKEN_LENGTH)]
    pub max_len: usize,
    /// Instruction text (default depends on --order).
    #[arg(long)]
    pub instruction: Option<String>,
    /// One record per distinct decoded text.
    #[arg(long)]
    pub dedup: bool,
    /// Restrict to the token ids listed in FILE (output of `prune`).
    #[arg(long, value_name = "FILE")]
    pub keep_ids: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct GenMtipaArgs {
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    #[arg(long, value_enum, default_value = "lines")]
    pub corpus_format: CorpusFormat,
    /// Sampling ratio in (0, 1]: decimal, fraction or percentage.
    #[arg(long, default_value = "0.1")]
    pub ratio: SamplingRatio,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "reverse")]
    pub order: OrderArg,
    #[arg(long)]
    pub instruction: Option<String>,
    /// Report sampled sentences longer than this many characters.
    #[arg(long, default_value_t = 1024)]
    pub long_threshold: usize,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct PruneArgs {
    #[command(flatten)]
    pub vocab: VocabArgs,
    /// Corpus file; repeatable.
    #[arg(long, value_name = "FILE")]
    pub corpus: Vec<PathBuf>,
    /// `pairs` tokenizes both source and target.
    #[arg(long, value_enum, default_value = "lines")]
    pub corpus_format: CorpusFormat,
    /// Output: one token id per line, ascending.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct DiffArgs {
    #[arg(long, value_name = "FILE")]
    pub pairs: PathBuf,
    /// Edit records, one JSON object per line.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Unequal-length pairs (default: <out>.dropped.jsonl).
    #[arg(long, value_name = "FILE")]
    pub dropped: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ApplyArgs {
    #[arg(long, value_name = "FILE")]
    pub source: PathBuf,
    /// `lines` numbers sentences from 1 to form ids.
    #[arg(long, value_enum, default_value = "pairs")]
    pub source_format: CorpusFormat,
    #[arg(long, value_name = "FILE")]
    pub edits: PathBuf,
    /// Skip the check that each edit's `incorrect` matches the source.
    #[arg(long)]
    pub lenient: bool,
    /// Corrected sentences, one per line, in source order.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EvalPositionArgs {
    #[arg(long, value_name = "FILE")]
    pub pairs: PathBuf,
    /// JSONL {"id", "prediction"} with raw model output.
    #[arg(long, value_name = "FILE")]
    pub predictions: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
    /// Reject prose around the JSON array instead of extracting it.
    #[arg(long)]
    pub strict_parse: bool,
    /// Compare SAIP character pairs as sets rather than multisets.
    #[arg(long)]
    pub saip_set: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EvalTraditionalArgs {
    #[arg(long, value_name = "FILE")]
    pub pairs: PathBuf,
    /// JSONL {"id", "prediction"} with the corrected sentence.
    #[arg(long, value_name = "FILE")]
    pub predictions: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
    /// Treat half-width and full-width forms as equal.
    #[arg(long)]
    pub width_normalize: bool,
}

#[derive(Debug, Clone, Args)]
pub struct TokenCountArgs {
    #[arg(long, value_name = "FILE")]
    pub pairs: PathBuf,
    #[command(flatten)]
    pub vocab: VocabArgs,
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Per-token position records from a vocabulary.
    GenTipa(GenTipaArgs),
    /// Per-sentence position records from a sampled corpus subset.
    GenMtipa(GenMtipaArgs),
    /// Token ids occurring when the corpora are tokenized.
    Prune(PruneArgs),
    /// Pair corpus to position-based edit records.
    Diff(DiffArgs),
    /// Apply edit records to source sentences.
    Apply(ApplyArgs),
    /// Score position-task predictions.
    EvalPosition(EvalPositionArgs),
    /// Score rewrite-task predictions.
    EvalTraditional(EvalTraditionalArgs),
    /// Compare output token counts of both task formats.
    TokenCount(TokenCountArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GenTipa(_) => "gen-tipa",
            Command::GenMtipa(_) => "gen-mtipa",
            Command::Prune(_) => "prune",
            Command::Diff(_) => "diff",
            Command::Apply(_) => "apply",
            Command::EvalPosition(_) => "eval-position",
            Command::EvalTraditional(_) => "eval-traditional",
            Command::TokenCount(_) => "token-count",
        }
    }

    fn vocab_inputs(v: &VocabArgs) -> Vec<PathBuf> {
        std::iter::once(v.vocab.clone()).chain(v.merges.clone()).collect()
    }

    /// Input files read and output files written by this command.
    pub fn paths(&self) -> (Vec<PathBuf>, Vec<PathBuf>) {
        match self {
            Command::GenTipa(a) => {
                let mut inputs = Self::vocab_inputs(&a.vocab);
                inputs.extend(a.keep_ids.clone());
                (inputs, vec![a.out.clone()])
            }
            Command::GenMtipa(a) => (vec![a.corpus.clone()], vec![a.out.clone()]),
            Command::Prune(a) => {
                let mut inputs = Self::vocab_inputs(&a.vocab);
                inputs.extend(a.corpus.iter().cloned());
                (inputs, vec![a.out.clone()])
            }
            Command::Diff(a) => (vec![a.pairs.clone()], vec![a.out.clone(), commands::dropped_path(a)]),
            Command::Apply(a) => (vec![a.source.clone(), a.edits.clone()], vec![a.out.clone()]),
            Command::EvalPosition(a) => {
                (vec![a.pairs.clone(), a.predictions.clone()], a.report.iter().cloned().collect())
            }
            Command::EvalTraditional(a) => {
                (vec![a.pairs.clone(), a.predictions.clone()], a.report.iter().cloned().collect())
            }
            Command::TokenCount(a) => {
                let mut inputs = vec![a.pairs.clone()];
                inputs.extend(Self::vocab_inputs(&a.vocab));
                (inputs, a.report.iter().cloned().collect())
            }
        }
    }

    fn seed(&self) -> Option<u64> {
        match self {
            Command::GenMtipa(a) => Some(a.seed),
            _ => None,
        }
    }
}

fn validate_paths(inputs: &[PathBuf], outputs: &[PathBuf], manifest: Option<&Path>) -> Result<(), CliError> {
    for p in inputs {
        if !p.is_file() {
            return Err(CliError::Usage(format!("input file {} does not exist", p.display())));
        }
    }
    for p in outputs.iter().map(PathBuf::as_path).chain(manifest) {
        let parent = p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
        if !parent.is_dir() {
            return Err(CliError::Usage(format!("output directory {} does not exist", parent.display())));
        }
        if p.is_dir() {
            return Err(CliError::Usage(format!("output path {} is a directory", p.display())));
        }
    }
    Ok(())
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code. Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    match try_run(args.into_iter().map(Into::into).collect()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn try_run(args: Vec<OsString>) -> Result<(), CliError> {
    let subcommands: Vec<String> = Cli::command().get_subcommands().map(|c| c.get_name().to_string()).collect();
    let args = config::merge_config(args, &subcommands)?;
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(CliError::Usage(e.to_string().trim_end().to_string())),
    };

    let (inputs, outputs) = cli.command.paths();
    validate_paths(&inputs, &outputs, cli.manifest.as_deref())?;
    commands::execute(&cli.command)?;

    if let Some(path) = &cli.manifest {
        let digest = |paths: &[PathBuf]| -> Result<Vec<Artifact>, CliError> {
            paths.iter().filter(|p| p.is_file()).map(|p| Artifact::digest(p).map_err(CliError::from)).collect()
        };
        let manifest = Manifest {
            tool: "tipa",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: cli.command.name().to_string(),
            arguments: args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect(),
            config: cli.config.clone(),
            seed: cli.command.seed(),
            inputs: digest(&inputs)?,
            outputs: digest(&outputs)?,
        };
        manifest.write(path)?;
    }
    Ok(())
}
