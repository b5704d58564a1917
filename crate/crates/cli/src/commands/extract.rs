//! `ppt extract`: one PPTF feature file per manifest utterance.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rayon::prelude::*;

use ppt_core::corpus;

use crate::config::PipelineConfig;
use crate::CliError;

use super::{with_pool, FrameArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FeatureKindArg {
    /// Log-mel spectrogram frames.
    Mel,
    /// Mel-cepstral frames (DCT of the log-mel), the clustering default.
    Cepstra,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// JSONL manifest of utterances to process.
    #[arg(long)]
    pub manifest: PathBuf,

    /// Directory receiving `<id>.pptf` files (created if absent).
    #[arg(long)]
    pub out_dir: PathBuf,

    #[arg(long, value_enum, default_value_t = FeatureKindArg::Cepstra)]
    pub kind: FeatureKindArg,

    #[command(flatten)]
    pub frame: FrameArgs,
}

/// Returns the number of utterances that failed; the rest are written.
pub fn cmd_extract(
    args: &ExtractArgs,
    cfg: &PipelineConfig,
    jobs: usize,
) -> Result<usize, CliError> {
    let manifest = corpus::load_manifest(&args.manifest)?;
    std::fs::create_dir_all(&args.out_dir)?;
    let analysis = args.frame.analysis(cfg);
    let want_cepstra = args.kind == FeatureKindArg::Cepstra;

    let results: Vec<(String, Result<(), CliError>)> = with_pool(jobs, || {
        manifest
            .records
            .par_iter()
            .map(|r| {
                let out_path = args.out_dir.join(format!("{}.pptf", r.id));
                let result = (|| -> Result<(), CliError> {
                    let w = analysis.load_audio(r.audio_path.as_ref())?;
                    let features = if want_cepstra {
                        analysis.cepstra(&w)?
                    } else {
                        ppt_core::dsp::mel_spectrogram(&w, &analysis.mel)?
                    };
                    features.save(&out_path)?;
                    Ok(())
                })();
                (r.id.clone(), result)
            })
            .collect()
    })?;

    let mut failures = 0;
    for (id, result) in results {
        if let Err(e) = result {
            eprintln!("extract failed for {id}: {e}");
            failures += 1;
        }
    }
    println!(
        "extracted {} utterance(s) to {}",
        manifest.len() - failures,
        args.out_dir.display()
    );
    Ok(failures)
}
