//! `ppt tokenize`: feature files to deduplicated token/duration lines.

use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;

use ppt_core::corpus;
use ppt_core::dsp::FeatureMatrix;
use ppt_core::quantizer;
use ppt_core::tokenizer::{self, TokenFileEntry};

use crate::config::PipelineConfig;
use crate::CliError;

use super::{feature_files, selected_ids, with_pool, SplitArg};

#[derive(Debug, Args)]
pub struct TokenizeArgs {
    #[arg(long)]
    pub features: PathBuf,

    #[arg(long)]
    pub codebook: PathBuf,

    /// Output token file.
    #[arg(long)]
    pub out: PathBuf,

    /// Emit bare token lines (`<id>\t<tok tok ...>`) without durations.
    #[arg(long)]
    pub no_durations: bool,

    #[arg(long)]
    pub manifest: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = SplitArg::All)]
    pub split: SplitArg,
}

pub fn cmd_tokenize(
    args: &TokenizeArgs,
    _cfg: &PipelineConfig,
    jobs: usize,
) -> Result<(), CliError> {
    let cb = quantizer::load_codebook(&args.codebook)?;
    let selection = match &args.manifest {
        Some(path) => Some(selected_ids(&corpus::load_manifest(path)?, args.split)),
        None => None,
    };
    let files = feature_files(&args.features, selection.as_deref())?;

    let mut entries: Vec<TokenFileEntry> = with_pool(jobs, || {
        files
            .par_iter()
            .map(|(id, path)| -> Result<TokenFileEntry, CliError> {
                let features = FeatureMatrix::load(path)?;
                let ts = tokenizer::tokenize_utterance(&cb, &features)?;
                Ok(TokenFileEntry::from_sequence(id.clone(), &ts))
            })
            .collect::<Result<Vec<_>, _>>()
    })??;
    entries.sort_by(|a, b| a.id.cmp(&b.id));

    tokenizer::write_token_file(&args.out, &entries, !args.no_durations)?;
    println!(
        "tokenized {} utterance(s) to {}",
        entries.len(),
        args.out.display()
    );
    Ok(())
}
