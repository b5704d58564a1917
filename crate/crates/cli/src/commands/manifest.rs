//! `ppt filter` and `ppt make-splits`: manifest bookkeeping.

use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;

use ppt_core::corpus::{self, Split, SplitConfig};
use ppt_core::dsp::{self, PitchConfig};

use crate::config::PipelineConfig;
use crate::CliError;

use super::with_pool;

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[arg(long)]
    pub manifest: PathBuf,

    #[arg(long)]
    pub out: PathBuf,

    /// Utterances above this duration are excluded.
    #[arg(long, default_value_t = 20.0)]
    pub max_duration: f64,

    /// Re-measure duration and pitch from the audio files instead of
    /// trusting the manifest fields.
    #[arg(long)]
    pub probe: bool,

    #[arg(long)]
    pub hop: Option<u32>,
}

/// Returns the number of probe failures (0 without `--probe`).
pub fn cmd_filter(args: &FilterArgs, cfg: &PipelineConfig, jobs: usize) -> Result<usize, CliError> {
    let mut manifest = corpus::load_manifest(&args.manifest)?;
    let mut failures = 0usize;

    if args.probe {
        let pitch_cfg = PitchConfig {
            hop: args.hop.unwrap_or(cfg.hop) as usize,
            ..Default::default()
        };
        let sample_rate = cfg.sample_rate;
        let probes: Vec<Result<(f64, bool), CliError>> = with_pool(jobs, || {
            manifest
                .records
                .par_iter()
                .map(|r| {
                    let w = dsp::load_wav(&r.audio_path)?;
                    let duration = w.duration();
                    let resampled = dsp::resample(&w, sample_rate)?;
                    let track = dsp::extract_f0(&resampled, &pitch_cfg)?;
                    Ok((duration, track.any_voiced()))
                })
                .collect()
        })?;
        for (record, probe) in manifest.records.iter_mut().zip(probes) {
            match probe {
                Ok((duration, has_pitch)) => {
                    record.duration_sec = duration;
                    record.has_pitch = has_pitch;
                }
                Err(e) => {
                    eprintln!("probe failed for {}: {e}", record.id);
                    failures += 1;
                }
            }
        }
    }

    let too_long = manifest
        .records
        .iter()
        .filter(|r| r.duration_sec > args.max_duration)
        .count();
    let no_pitch = manifest.records.iter().filter(|r| !r.has_pitch).count();

    manifest.filter(args.max_duration);
    corpus::save_manifest(&manifest, &args.out)?;

    let excluded = manifest.split_len(Split::Excluded);
    println!(
        "{} records: {excluded} excluded ({too_long} over {} s, {no_pitch} without pitch)",
        manifest.len(),
        args.max_duration
    );
    Ok(failures)
}

#[derive(Debug, Args)]
pub struct MakeSplitsArgs {
    #[arg(long)]
    pub manifest: PathBuf,

    #[arg(long)]
    pub out: PathBuf,

    #[arg(long, default_value_t = 30)]
    pub test_speakers: usize,

    #[arg(long, default_value_t = 3)]
    pub utts_per_speaker: usize,

    #[arg(long, default_value_t = 90)]
    pub valid_size: usize,

    #[arg(long, default_value_t = 10)]
    pub min_speaker_utts: usize,
}

pub fn cmd_make_splits(args: &MakeSplitsArgs, cfg: &PipelineConfig) -> Result<(), CliError> {
    let mut manifest = corpus::load_manifest(&args.manifest)?;
    manifest.make_splits(&SplitConfig {
        test_speakers: args.test_speakers,
        utts_per_test_speaker: args.utts_per_speaker,
        valid_size: args.valid_size,
        min_speaker_utts: args.min_speaker_utts,
        seed: cfg.seed,
    })?;
    corpus::save_manifest(&manifest, &args.out)?;
    println!(
        "splits: {} train / {} valid / {} test ({} excluded)",
        manifest.split_len(Split::Train),
        manifest.split_len(Split::Valid),
        manifest.split_len(Split::Test),
        manifest.split_len(Split::Excluded),
    );
    Ok(())
}
