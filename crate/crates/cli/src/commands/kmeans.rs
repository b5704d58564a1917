//! `ppt fit-kmeans`: learn a codebook over pooled feature files.

use std::path::PathBuf;

use clap::Args;

use ppt_core::corpus;
use ppt_core::quantizer::{self, KMeansConfig};

use crate::config::PipelineConfig;
use crate::CliError;

use super::{feature_files, pool_features, selected_ids, SplitArg};

#[derive(Debug, Args)]
pub struct FitKmeansArgs {
    /// Directory of PPTF feature files.
    #[arg(long)]
    pub features: PathBuf,

    /// Output codebook path.
    #[arg(long)]
    pub out: PathBuf,

    /// Restrict pooling to a manifest split instead of the whole directory.
    #[arg(long)]
    pub manifest: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = SplitArg::Train)]
    pub split: SplitArg,

    #[arg(long)]
    pub k: Option<usize>,

    #[arg(long)]
    pub batch_size: Option<usize>,

    #[arg(long, default_value_t = 300)]
    pub max_iters: usize,

    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
}

pub fn cmd_fit_kmeans(args: &FitKmeansArgs, cfg: &PipelineConfig) -> Result<(), CliError> {
    let selection = match &args.manifest {
        Some(path) => Some(selected_ids(&corpus::load_manifest(path)?, args.split)),
        None => None,
    };
    let files = feature_files(&args.features, selection.as_deref())?;
    let (data, dim, kind) = pool_features(&files)?;

    let kmeans = KMeansConfig {
        k: args.k.unwrap_or(cfg.k),
        batch_size: args.batch_size.unwrap_or(cfg.kmeans_batch),
        max_iters: args.max_iters,
        tol: args.tol,
        seed: cfg.seed,
    };
    let (cb, stats) = quantizer::fit_minibatch_kmeans_with_stats(&data, dim, &kmeans, kind)?;
    let final_inertia = quantizer::inertia(&cb, &data)?;
    quantizer::save_codebook(&cb, &args.out)?;

    println!(
        "codebook: k={} d={} from {} frames in {} file(s); {} iteration(s), converged={}, inertia={final_inertia:.6}",
        cb.k(),
        cb.d(),
        data.len() / dim,
        files.len(),
        stats.iterations,
        stats.converged,
    );
    Ok(())
}
