//! Subcommand implementations. Everything here is deterministic given
//! the manifest contents, the input files, and the resolved seed: file
//! sets are always traversed in sorted id order and worker-pool size
//! never affects outputs.

pub mod eval;
pub mod extract;
pub mod kmeans;
pub mod lm;
pub mod manifest;
pub mod sweep;
pub mod tokenize;

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};

use ppt_core::corpus::{Manifest, Split};
use ppt_core::dsp::{self, FeatureMatrix, MelConfig, PitchConfig, PitchTrack, Waveform};
use ppt_core::FeatureKind;

use crate::config::PipelineConfig;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Valid,
    Test,
    All,
}

impl SplitArg {
    pub fn to_split(self) -> Option<Split> {
        match self {
            SplitArg::Train => Some(Split::Train),
            SplitArg::Valid => Some(Split::Valid),
            SplitArg::Test => Some(Split::Test),
            SplitArg::All => None,
        }
    }
}

/// Ids selected by a split argument, sorted. `All` means every
/// non-excluded record.
pub(crate) fn selected_ids(manifest: &Manifest, split: SplitArg) -> Vec<String> {
    let mut ids: Vec<String> = manifest
        .records
        .iter()
        .filter(|r| match split.to_split() {
            Some(s) => r.split == s,
            None => r.split != Split::Excluded,
        })
        .map(|r| r.id.clone())
        .collect();
    ids.sort();
    ids
}

/// Resolve `(id, <dir>/<id>.pptf)` pairs, either for a manifest selection
/// (every id must be present) or for every feature file in the directory.
pub(crate) fn feature_files(
    dir: &Path,
    selection: Option<&[String]>,
) -> Result<Vec<(String, PathBuf)>, CliError> {
    match selection {
        Some(ids) => ids
            .iter()
            .map(|id| {
                let path = dir.join(format!("{id}.pptf"));
                if path.is_file() {
                    Ok((id.clone(), path))
                } else {
                    Err(CliError::MissingFeatures(format!(
                        "{} has no feature file for utterance {id}",
                        dir.display()
                    )))
                }
            })
            .collect(),
        None => {
            let mut files = Vec::new();
            for entry in std::fs::read_dir(dir).map_err(|e| {
                CliError::MissingFeatures(format!("cannot read {}: {e}", dir.display()))
            })? {
                let path = entry?.path();
                if path.extension().is_some_and(|e| e == "pptf") {
                    let id = path
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_default();
                    files.push((id, path));
                }
            }
            if files.is_empty() {
                return Err(CliError::MissingFeatures(format!(
                    "{} contains no .pptf files",
                    dir.display()
                )));
            }
            files.sort();
            Ok(files)
        }
    }
}

/// Concatenate the rows of many feature files into one flat point set.
pub(crate) fn pool_features(
    files: &[(String, PathBuf)],
) -> Result<(Vec<f64>, usize, FeatureKind), CliError> {
    let mut data = Vec::new();
    let mut dim = 0usize;
    let mut kind = FeatureKind::External;
    for (id, path) in files {
        let m = FeatureMatrix::load(path)?;
        if dim == 0 {
            dim = m.dim();
            kind = m.kind;
        } else if m.dim() != dim {
            return Err(CliError::Config(format!(
                "feature dimension mismatch: {id} has {}, expected {dim}",
                m.dim()
            )));
        }
        data.extend_from_slice(m.as_flat());
    }
    Ok((data, dim, kind))
}

/// STFT / cepstral flags shared by `extract` and `eval`.
#[derive(Debug, Clone, Args)]
pub struct FrameArgs {
    #[arg(long, default_value_t = 1024)]
    pub n_fft: usize,

    #[arg(long, default_value_t = 1024)]
    pub win: usize,

    #[arg(long, default_value_t = 80)]
    pub n_mels: usize,

    /// Cepstral coefficients kept (coefficient 0 is the energy term).
    #[arg(long, default_value_t = 13)]
    pub n_coef: usize,

    #[arg(long, default_value_t = 0.0)]
    pub fmin: f64,

    #[arg(long, default_value_t = 8000.0)]
    pub fmax: f64,

    /// Hop in samples (defaults to the pipeline hop).
    #[arg(long)]
    pub hop: Option<u32>,

    /// Analysis rate; audio is resampled to it (defaults to the pipeline rate).
    #[arg(long)]
    pub sample_rate: Option<u32>,
}

impl FrameArgs {
    pub(crate) fn analysis(&self, cfg: &PipelineConfig) -> AnalysisConfig {
        let hop = self.hop.unwrap_or(cfg.hop) as usize;
        AnalysisConfig {
            sample_rate: self.sample_rate.unwrap_or(cfg.sample_rate),
            mel: MelConfig {
                n_fft: self.n_fft,
                hop,
                win: self.win,
                n_mels: self.n_mels,
                fmin: self.fmin,
                fmax: self.fmax,
                ..Default::default()
            },
            n_coef: self.n_coef,
            pitch: PitchConfig {
                hop,
                ..Default::default()
            },
        }
    }
}

/// Frame-level analysis settings shared by extract and eval.
#[derive(Debug, Clone)]
pub(crate) struct AnalysisConfig {
    pub sample_rate: u32,
    pub mel: MelConfig,
    pub n_coef: usize,
    pub pitch: PitchConfig,
}

impl AnalysisConfig {
    pub fn load_audio(&self, path: &Path) -> Result<Waveform, CliError> {
        let w = dsp::load_wav(path)?;
        Ok(dsp::resample(&w, self.sample_rate)?)
    }

    pub fn cepstra(&self, w: &Waveform) -> Result<FeatureMatrix, CliError> {
        let mel = dsp::mel_spectrogram(w, &self.mel)?;
        Ok(dsp::mel_cepstra(&mel, self.n_coef)?)
    }

    pub fn pitch(&self, w: &Waveform) -> Result<PitchTrack, CliError> {
        Ok(dsp::extract_f0(w, &self.pitch)?)
    }
}

/// Run a closure on a rayon pool of the requested size (0 = default pool).
pub(crate) fn with_pool<T: Send>(
    jobs: usize,
    op: impl FnOnce() -> T + Send,
) -> Result<T, CliError> {
    if jobs == 0 {
        Ok(op())
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CliError::Config(format!("cannot build worker pool: {e}")))?;
        Ok(pool.install(op))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ppt_core::corpus::UtteranceRecord;

    fn record(id: &str, split: Split) -> UtteranceRecord {
        UtteranceRecord {
            id: id.into(),
            speaker: "s".into(),
            audio_path: format!("{id}.wav"),
            duration_sec: 1.0,
            has_pitch: true,
            split,
        }
    }

    #[test]
    fn selected_ids_sorted_and_split_scoped() {
        let manifest = Manifest::new(vec![
            record("b", Split::Train),
            record("a", Split::Train),
            record("c", Split::Test),
            record("d", Split::Excluded),
        ]);
        assert_eq!(selected_ids(&manifest, SplitArg::Train), vec!["a", "b"]);
        assert_eq!(selected_ids(&manifest, SplitArg::Test), vec!["c"]);
        // `all` covers everything except excluded records.
        assert_eq!(selected_ids(&manifest, SplitArg::All), vec!["a", "b", "c"]);
    }

    #[test]
    fn feature_files_sorted_and_strict_about_missing_ids() {
        let dir = tempfile::tempdir().unwrap();
        for id in ["zz", "aa"] {
            let m = FeatureMatrix::from_flat(vec![0.0, 1.0], 2, 50.0, FeatureKind::External, 0);
            m.save(dir.path().join(format!("{id}.pptf"))).unwrap();
        }

        let all = feature_files(dir.path(), None).unwrap();
        let ids: Vec<&str> = all.iter().map(|(id, _)| id.as_str()).collect();
        assert_eq!(ids, vec!["aa", "zz"]);

        let selection = vec!["aa".to_string(), "missing".to_string()];
        assert!(matches!(
            feature_files(dir.path(), Some(&selection)),
            Err(CliError::MissingFeatures(_))
        ));

        let empty = tempfile::tempdir().unwrap();
        assert!(matches!(
            feature_files(empty.path(), None),
            Err(CliError::MissingFeatures(_))
        ));
    }
}
