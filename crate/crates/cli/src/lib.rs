//! Batch pipeline driver: subcommands chaining audio ingestion, codebook
//! fitting, tokenization, language modeling, and evaluation over JSONL
//! manifests. `main` is a thin wrapper over [`run`].

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

use config::PipelineConfig;

/// Exit codes: 0 success, 1 partial or runtime failure, 2 usage/config.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("utterance id mismatch: {0}")]
    IdMismatch(String),
    #[error("missing features: {0}")]
    MissingFeatures(String),
    #[error(transparent)]
    Dsp(#[from] ppt_core::dsp::DspError),
    #[error(transparent)]
    Quantizer(#[from] ppt_core::quantizer::QuantizerError),
    #[error(transparent)]
    Tokenizer(#[from] ppt_core::tokenizer::TokenizerError),
    #[error(transparent)]
    Lm(#[from] ppt_core::tokenlm::LmError),
    #[error(transparent)]
    Metrics(#[from] ppt_core::metrics::MetricsError),
    #[error(transparent)]
    Corpus(#[from] ppt_core::corpus::CorpusError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(format!("JSON serialization failed: {e}"))
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "ppt",
    about = "Pseudo phonetic token pipeline: features, codebooks, token LMs, and objective metrics",
    version
)]
pub struct Cli {
    /// TOML config file overriding built-in defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Seed for every random choice (overrides config file and PPT_SEED).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for per-utterance stages (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract PPTF feature files for every utterance in a manifest.
    Extract(commands::extract::ExtractArgs),
    /// Probe durations/pitch and mark over-long or pitchless utterances excluded.
    Filter(commands::manifest::FilterArgs),
    /// Assign train/valid/test splits speaker-wise.
    MakeSplits(commands::manifest::MakeSplitsArgs),
    /// Fit a k-means codebook over pooled feature files.
    FitKmeans(commands::kmeans::FitKmeansArgs),
    /// Tokenize feature files into deduplicated token/duration sequences.
    Tokenize(commands::tokenize::TokenizeArgs),
    /// Train a smoothed n-gram LM on a token file.
    TrainLm(commands::lm::TrainLmArgs),
    /// Perplexity of a token file under a trained LM.
    Ppl(commands::lm::PplArgs),
    /// Sample token sequences from a trained LM.
    Sample(commands::lm::SampleArgs),
    /// Objective metrics report (MCD, F0-RMSE, PPL, Self-BLEU family).
    Eval(commands::eval::EvalArgs),
    /// Fit/tokenize/model each feature directory and tabulate LM metrics.
    Sweep(commands::sweep::SweepArgs),
}

/// Parse arguments from the environment and execute. Returns the process
/// exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(failures) if failures > 0 => {
            eprintln!("completed with {failures} per-file failure(s)");
            1
        }
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Execute a parsed invocation; `Ok(n)` carries the per-file failure count.
pub fn dispatch(cli: Cli) -> Result<usize, CliError> {
    let cfg = PipelineConfig::resolve(cli.config.as_deref(), cli.seed)?;
    let jobs = cli.jobs;
    match cli.command {
        Command::Extract(args) => commands::extract::cmd_extract(&args, &cfg, jobs),
        Command::Filter(args) => commands::manifest::cmd_filter(&args, &cfg, jobs),
        Command::MakeSplits(args) => commands::manifest::cmd_make_splits(&args, &cfg).map(|_| 0),
        Command::FitKmeans(args) => commands::kmeans::cmd_fit_kmeans(&args, &cfg).map(|_| 0),
        Command::Tokenize(args) => commands::tokenize::cmd_tokenize(&args, &cfg, jobs).map(|_| 0),
        Command::TrainLm(args) => commands::lm::cmd_train_lm(&args, &cfg).map(|_| 0),
        Command::Ppl(args) => commands::lm::cmd_ppl(&args).map(|_| 0),
        Command::Sample(args) => commands::lm::cmd_sample(&args, &cfg).map(|_| 0),
        Command::Eval(args) => commands::eval::cmd_eval(&args, &cfg, jobs).map(|_| 0),
        Command::Sweep(args) => commands::sweep::cmd_sweep(&args, &cfg).map(|_| 0),
    }
}
