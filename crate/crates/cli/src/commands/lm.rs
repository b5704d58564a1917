//! `ppt train-lm`, `ppt ppl`, `ppt sample`: the token language model.

use std::path::PathBuf;

use clap::{Args, ValueEnum};

use ppt_core::tokenizer::{self, TokenFileEntry};
use ppt_core::tokenlm::{NGramModel, Smoothing};

use crate::config::PipelineConfig;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SmoothingArg {
    /// Interpolated Kneser-Ney (absolute discount).
    Kn,
    /// Additive smoothing.
    AddK,
}

#[derive(Debug, Args)]
pub struct TrainLmArgs {
    /// Token file (durations, if present, are ignored).
    #[arg(long)]
    pub tokens: PathBuf,

    /// Output model path.
    #[arg(long)]
    pub out: PathBuf,

    /// n-gram order (defaults to the pipeline order).
    #[arg(long)]
    pub order: Option<usize>,

    #[arg(long, value_enum, default_value_t = SmoothingArg::Kn)]
    pub smoothing: SmoothingArg,

    /// Kneser-Ney absolute discount.
    #[arg(long, default_value_t = 0.75)]
    pub discount: f64,

    /// Pseudo-count for --smoothing add-k.
    #[arg(long, default_value_t = 0.5)]
    pub add_k: f64,

    /// Token inventory size; defaults to max token id + 1.
    #[arg(long)]
    pub vocab_size: Option<usize>,
}

pub(crate) fn read_sequences(path: &PathBuf) -> Result<Vec<Vec<u32>>, CliError> {
    Ok(tokenizer::read_token_file(path)?
        .into_iter()
        .map(|e| e.tokens)
        .collect())
}

pub fn cmd_train_lm(args: &TrainLmArgs, cfg: &PipelineConfig) -> Result<(), CliError> {
    let corpus = read_sequences(&args.tokens)?;
    let vocab = match args.vocab_size {
        Some(v) => v,
        None => corpus
            .iter()
            .flatten()
            .max()
            .map(|&m| m as usize + 1)
            .ok_or_else(|| {
                CliError::Config("token file has no tokens; pass --vocab-size explicitly".into())
            })?,
    };
    let smoothing = match args.smoothing {
        SmoothingArg::Kn => Smoothing::InterpolatedKneserNey(args.discount),
        SmoothingArg::AddK => Smoothing::AddK(args.add_k),
    };
    let order = args.order.unwrap_or(cfg.lm_order);
    let model = NGramModel::train(&corpus, vocab, order, smoothing, cfg.seed)?;
    model.save(&args.out)?;
    println!(
        "trained order-{order} model over {} sequence(s), inventory {vocab}, smoothing {smoothing:?}",
        corpus.len()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct PplArgs {
    #[arg(long)]
    pub lm: PathBuf,

    #[arg(long)]
    pub tokens: PathBuf,

    /// Also write `{"ppl": ...}` JSON here.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

pub fn cmd_ppl(args: &PplArgs) -> Result<f64, CliError> {
    let model = NGramModel::load(&args.lm)?;
    let test = read_sequences(&args.tokens)?;
    let ppl = model.perplexity(&test)?;
    println!("ppl\t{ppl}");
    if let Some(path) = &args.json {
        std::fs::write(path, serde_json::json!({ "ppl": ppl }).to_string())?;
    }
    Ok(ppl)
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub lm: PathBuf,

    /// Output token file (bare form, ids gen_0000, gen_0001, ...).
    #[arg(long)]
    pub out: PathBuf,

    /// How many sequences (defaults to the pipeline generation count).
    #[arg(long)]
    pub count: Option<usize>,

    /// Sampling temperature (defaults to the pipeline temperature).
    #[arg(long)]
    pub temperature: Option<f64>,

    #[arg(long, default_value_t = 1000)]
    pub max_len: usize,
}

pub fn cmd_sample(args: &SampleArgs, cfg: &PipelineConfig) -> Result<(), CliError> {
    let model = NGramModel::load(&args.lm)?;
    let count = args.count.unwrap_or(cfg.gen_count);
    let temperature = args.temperature.unwrap_or(cfg.temperature);
    if temperature <= 0.0 {
        return Err(CliError::Config(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    let batch = model.generate_batch(count, temperature, args.max_len, cfg.seed);
    let entries: Vec<TokenFileEntry> = batch
        .into_iter()
        .enumerate()
        .map(|(i, tokens)| TokenFileEntry {
            id: format!("gen_{i:04}"),
            tokens,
            durations: None,
        })
        .collect();
    tokenizer::write_token_file(&args.out, &entries, false)?;
    println!(
        "sampled {count} sequence(s) at temperature {temperature} to {}",
        args.out.display()
    );
    Ok(())
}
