//! `ppt eval`: the objective metrics report.
//!
//! Three independent input groups, each optional but at least one
//! required:
//!   - paired audio (`--manifest` + `--gen-audio`): MCD and F0-RMSE over
//!     utterances matched by id;
//!   - token corpora (`--gen-tokens` / `--gt-tokens`): Self-BLEU,
//!     Self-BLEU of the ground truth, and their ratio;
//!   - model (`--lm`): perplexity of `--ppl-tokens` (default
//!     `--gt-tokens`).

use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;

use ppt_core::corpus;
use ppt_core::metrics::{self, MetricsError, MetricsReport};
use ppt_core::tokenlm::NGramModel;

use crate::config::PipelineConfig;
use crate::CliError;

use super::lm::read_sequences;
use super::{selected_ids, with_pool, FrameArgs, SplitArg};

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Ground-truth manifest for paired audio metrics.
    #[arg(long, requires = "gen_audio")]
    pub manifest: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    pub split: SplitArg,

    /// Directory of generated `<id>.wav` files matching the manifest ids.
    #[arg(long, requires = "manifest")]
    pub gen_audio: Option<PathBuf>,

    /// Ground-truth token file (Self-BLEU reference corpus).
    #[arg(long)]
    pub gt_tokens: Option<PathBuf>,

    /// Generated token file.
    #[arg(long)]
    pub gen_tokens: Option<PathBuf>,

    /// Trained LM for perplexity.
    #[arg(long)]
    pub lm: Option<PathBuf>,

    /// Token file scored by --lm (defaults to --gt-tokens).
    #[arg(long)]
    pub ppl_tokens: Option<PathBuf>,

    /// Write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Write the key/value text report here.
    #[arg(long)]
    pub text_out: Option<PathBuf>,

    #[command(flatten)]
    pub frame: FrameArgs,
}

pub fn cmd_eval(
    args: &EvalArgs,
    cfg: &PipelineConfig,
    jobs: usize,
) -> Result<MetricsReport, CliError> {
    let mut report = MetricsReport::new();
    let mut evaluated_something = false;

    if let (Some(manifest_path), Some(gen_dir)) = (&args.manifest, &args.gen_audio) {
        evaluated_something = true;
        let manifest = corpus::load_manifest(manifest_path)?;
        let ids = selected_ids(&manifest, args.split);
        if ids.is_empty() {
            return Err(CliError::Config(format!(
                "manifest has no records in split {:?}",
                args.split
            )));
        }
        let analysis = args.frame.analysis(cfg);

        // Pair each ground-truth record with <gen_dir>/<id>.wav.
        let mut pairs = Vec::with_capacity(ids.len());
        for id in &ids {
            let record = manifest.records.iter().find(|r| &r.id == id).unwrap();
            let gen_path = gen_dir.join(format!("{id}.wav"));
            if !gen_path.is_file() {
                return Err(CliError::IdMismatch(format!(
                    "no generated audio for utterance {id}"
                )));
            }
            pairs.push((id.clone(), PathBuf::from(&record.audio_path), gen_path));
        }

        let per_pair: Vec<Result<(f64, Option<f64>), CliError>> = with_pool(jobs, || {
            pairs
                .par_iter()
                .map(|(_, gt_path, gen_path)| {
                    let gt = analysis.load_audio(gt_path)?;
                    let gen = analysis.load_audio(gen_path)?;
                    let gt_cep = analysis.cepstra(&gt)?;
                    let gen_cep = analysis.cepstra(&gen)?;
                    let mcd = metrics::mcd(&gt_cep, &gen_cep)?;
                    let f0 = match metrics::f0_rmse(
                        &analysis.pitch(&gt)?,
                        &gt_cep,
                        &analysis.pitch(&gen)?,
                        &gen_cep,
                    ) {
                        Ok(v) => Some(v),
                        Err(MetricsError::NoVoicedOverlap) => None,
                        Err(e) => return Err(e.into()),
                    };
                    Ok((mcd, f0))
                })
                .collect()
        })?;

        let mut mcd_sum = 0.0;
        let mut f0_sum = 0.0;
        let mut f0_pairs = 0usize;
        for result in per_pair {
            let (mcd, f0) = result?;
            mcd_sum += mcd;
            match f0 {
                Some(v) => {
                    f0_sum += v;
                    f0_pairs += 1;
                }
                None => report.skipped_no_voiced_overlap += 1,
            }
        }
        report.mcd_db = Some(mcd_sum / ids.len() as f64);
        if f0_pairs > 0 {
            report.f0_rmse_hz = Some(f0_sum / f0_pairs as f64);
        }
    }

    let gt_sequences = match &args.gt_tokens {
        Some(path) => Some(read_sequences(path)?),
        None => None,
    };

    if let Some(gen_path) = &args.gen_tokens {
        evaluated_something = true;
        let all: Vec<Vec<u32>> = read_sequences(gen_path)?;
        let generated: Vec<Vec<u32>> = all.iter().filter(|s| !s.is_empty()).cloned().collect();
        report.skipped_empty_generated = all.len() - generated.len();
        match gt_sequences.as_deref() {
            Some(gt) => {
                let gt_nonempty: Vec<Vec<u32>> =
                    gt.iter().filter(|s| !s.is_empty()).cloned().collect();
                let bleu_report = metrics::normalized_self_bleu(&generated, &gt_nonempty, 4)?;
                report.self_bleu = Some(bleu_report.self_bleu);
                report.self_bleu_gt = Some(bleu_report.self_bleu_gt);
                report.normalized_self_bleu = Some(bleu_report.normalized);
                report.normalized_exceeds_unity = bleu_report.exceeds_unity();
            }
            None => {
                report.self_bleu = Some(metrics::self_bleu(&generated, 4)?);
            }
        }
    } else if let Some(gt) = gt_sequences.as_deref() {
        evaluated_something = true;
        report.self_bleu_gt = Some(metrics::self_bleu(gt, 4)?);
    }

    if let Some(lm_path) = &args.lm {
        evaluated_something = true;
        let tokens = match (&args.ppl_tokens, &args.gt_tokens) {
            (Some(path), _) => read_sequences(path)?,
            (None, Some(path)) => read_sequences(path)?,
            (None, None) => {
                return Err(CliError::Config(
                    "--lm needs --ppl-tokens or --gt-tokens to score".into(),
                ))
            }
        };
        let model = NGramModel::load(lm_path)?;
        report.ppl = Some(model.perplexity(&tokens)?);
    }

    if !evaluated_something {
        return Err(CliError::Config(
            "nothing to evaluate: pass --manifest/--gen-audio, token files, or --lm".into(),
        ));
    }

    print!("{}", report.to_kv_text());
    if let Some(path) = &args.out {
        std::fs::write(path, serde_json::to_string_pretty(&report)? + "\n")?;
    }
    if let Some(path) = &args.text_out {
        std::fs::write(path, report.to_kv_text())?;
    }
    Ok(report)
}
