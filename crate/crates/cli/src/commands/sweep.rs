//! `ppt sweep`: run the codebook -> tokenizer -> LM chain once per
//! feature directory (one per candidate layer) and tabulate PPL and the
//! normalized Self-BLEU of unconditional generations.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;

use ppt_core::corpus;
use ppt_core::metrics;
use ppt_core::quantizer::{self, KMeansConfig};
use ppt_core::tokenizer;
use ppt_core::tokenlm::{NGramModel, Smoothing};
use ppt_core::FeatureMatrix;

use crate::config::PipelineConfig;
use crate::CliError;

use super::{feature_files, pool_features, selected_ids, SplitArg};

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Feature directory for one layer; repeat per layer.
    #[arg(long = "features-dir", required = true)]
    pub feature_dirs: Vec<PathBuf>,

    /// Manifest carrying the train/test split.
    #[arg(long)]
    pub manifest: PathBuf,

    #[arg(long)]
    pub k: Option<usize>,

    #[arg(long)]
    pub batch_size: Option<usize>,

    #[arg(long, default_value_t = 300)]
    pub max_iters: usize,

    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,

    #[arg(long)]
    pub order: Option<usize>,

    #[arg(long, default_value_t = 0.75)]
    pub discount: f64,

    #[arg(long)]
    pub temperature: Option<f64>,

    /// Generated sequences per layer (defaults to the pipeline count).
    #[arg(long)]
    pub count: Option<usize>,

    #[arg(long, default_value_t = 1000)]
    pub max_len: usize,

    /// Write the rows as JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub layer: String,
    pub ppl: f64,
    pub self_bleu: f64,
    pub self_bleu_gt: f64,
    pub normalized_self_bleu: f64,
    pub generated: usize,
    pub skipped_empty_generated: usize,
}

pub fn cmd_sweep(args: &SweepArgs, cfg: &PipelineConfig) -> Result<Vec<SweepRow>, CliError> {
    let manifest = corpus::load_manifest(&args.manifest)?;
    let train_ids = selected_ids(&manifest, SplitArg::Train);
    let test_ids = selected_ids(&manifest, SplitArg::Test);
    if train_ids.is_empty() {
        return Err(CliError::Config("manifest has no train records".into()));
    }
    if test_ids.len() < 2 {
        return Err(CliError::Config(
            "manifest needs at least two test records for Self-BLEU".into(),
        ));
    }

    let mut rows = Vec::with_capacity(args.feature_dirs.len());
    for dir in &args.feature_dirs {
        let layer = dir
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| dir.display().to_string());
        rows.push(sweep_layer(args, cfg, &train_ids, &test_ids, dir, layer)?);
    }

    println!(
        "{:<20} {:>12} {:>12} {:>14} {:>18}",
        "layer", "ppl", "self_bleu", "self_bleu_gt", "normalized"
    );
    for row in &rows {
        println!(
            "{:<20} {:>12.4} {:>12.6} {:>14.6} {:>18.6}",
            row.layer, row.ppl, row.self_bleu, row.self_bleu_gt, row.normalized_self_bleu
        );
    }
    if let Some(path) = &args.out {
        std::fs::write(path, serde_json::to_string_pretty(&rows)? + "\n")?;
    }
    Ok(rows)
}

fn sweep_layer(
    args: &SweepArgs,
    cfg: &PipelineConfig,
    train_ids: &[String],
    test_ids: &[String],
    dir: &Path,
    layer: String,
) -> Result<SweepRow, CliError> {
    let train_files = feature_files(dir, Some(train_ids))?;
    let test_files = feature_files(dir, Some(test_ids))?;

    let (train_data, dim, kind) = pool_features(&train_files)?;
    let k = args.k.unwrap_or(cfg.k);
    let cb = quantizer::fit_minibatch_kmeans(
        &train_data,
        dim,
        &KMeansConfig {
            k,
            batch_size: args.batch_size.unwrap_or(cfg.kmeans_batch),
            max_iters: args.max_iters,
            tol: args.tol,
            seed: cfg.seed,
        },
        kind,
    )?;

    let tokenize_all = |files: &[(String, PathBuf)]| -> Result<Vec<Vec<u32>>, CliError> {
        files
            .iter()
            .map(|(_, path)| {
                let features = FeatureMatrix::load(path)?;
                Ok(tokenizer::tokenize_utterance(&cb, &features)?.tokens)
            })
            .collect()
    };
    let train_tokens = tokenize_all(&train_files)?;
    let test_tokens = tokenize_all(&test_files)?;

    let model = NGramModel::train(
        &train_tokens,
        k,
        args.order.unwrap_or(cfg.lm_order),
        Smoothing::InterpolatedKneserNey(args.discount),
        cfg.seed,
    )?;
    let ppl = model.perplexity(&test_tokens)?;

    let count = args.count.unwrap_or(cfg.gen_count);
    let generated_all = model.generate_batch(
        count,
        args.temperature.unwrap_or(cfg.temperature),
        args.max_len,
        cfg.seed,
    );
    let generated: Vec<Vec<u32>> = generated_all
        .iter()
        .filter(|s| !s.is_empty())
        .cloned()
        .collect();
    let bleu_report = metrics::normalized_self_bleu(&generated, &test_tokens, 4)?;

    Ok(SweepRow {
        layer,
        ppl,
        self_bleu: bleu_report.self_bleu,
        self_bleu_gt: bleu_report.self_bleu_gt,
        normalized_self_bleu: bleu_report.normalized,
        generated: generated.len(),
        skipped_empty_generated: generated_all.len() - generated.len(),
    })
}
