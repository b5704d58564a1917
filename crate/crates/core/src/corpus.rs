//! Utterance manifests: JSONL persistence, duration/pitch filtering, and
//! speaker-based train/valid/test splits.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("malformed manifest record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("only {eligible} eligible speakers, need {required}")]
    InsufficientSpeakers { eligible: usize, required: usize },
    #[error("not enough records: {0}")]
    InsufficientRecords(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
    Excluded,
}

/// One manifest line. Field names match the JSONL schema exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtteranceRecord {
    pub id: String,
    pub speaker: String,
    pub audio_path: String,
    pub duration_sec: f64,
    pub has_pitch: bool,
    pub split: Split,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub records: Vec<UtteranceRecord>,
}

#[derive(Debug, Clone)]
pub struct SplitConfig {
    pub test_speakers: usize,
    pub utts_per_test_speaker: usize,
    pub valid_size: usize,
    /// A speaker needs at least this many usable utterances to be
    /// eligible for the test set.
    pub min_speaker_utts: usize,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            test_speakers: 30,
            utts_per_test_speaker: 3,
            valid_size: 90,
            min_speaker_utts: 10,
            seed: 0,
        }
    }
}

impl Manifest {
    pub fn new(records: Vec<UtteranceRecord>) -> Self {
        Self { records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Utterances per speaker, over non-excluded records.
    pub fn speaker_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for r in &self.records {
            if r.split != Split::Excluded {
                *counts.entry(r.speaker.clone()).or_insert(0) += 1;
            }
        }
        counts
    }

    pub fn split_len(&self, split: Split) -> usize {
        self.records.iter().filter(|r| r.split == split).count()
    }

    pub fn records_in(&self, split: Split) -> impl Iterator<Item = &UtteranceRecord> {
        self.records.iter().filter(move |r| r.split == split)
    }

    /// Mark records excluded iff they run long or carry no pitch.
    /// Records that pass but were previously excluded return to the
    /// train pool, keeping the exclusion flag a pure function of the
    /// criteria (and the operation idempotent).
    pub fn filter(&mut self, max_duration_sec: f64) {
        for r in &mut self.records {
            let violates = r.duration_sec > max_duration_sec || !r.has_pitch;
            if violates {
                r.split = Split::Excluded;
            } else if r.split == Split::Excluded {
                r.split = Split::Train;
            }
        }
    }

    /// Assign test/valid/train over non-excluded records: a fixed number
    /// of randomly chosen eligible speakers contribute a fixed number of
    /// test utterances each, a random remainder forms the validation
    /// set, and everything else trains. Deterministic for a given seed.
    pub fn make_splits(&mut self, cfg: &SplitConfig) -> Result<(), CorpusError> {
        let mut by_speaker: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, r) in self.records.iter().enumerate() {
            if r.split != Split::Excluded {
                by_speaker.entry(&r.speaker).or_default().push(i);
            }
        }
        let eligible: Vec<&str> = by_speaker
            .iter()
            .filter(|(_, idxs)| idxs.len() >= cfg.min_speaker_utts)
            .map(|(s, _)| *s)
            .collect();
        if eligible.len() < cfg.test_speakers {
            return Err(CorpusError::InsufficientSpeakers {
                eligible: eligible.len(),
                required: cfg.test_speakers,
            });
        }

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let chosen_speakers = sample_without_replacement(&eligible, cfg.test_speakers, &mut rng);

        let mut test_indices = Vec::with_capacity(cfg.test_speakers * cfg.utts_per_test_speaker);
        for speaker in &chosen_speakers {
            let pool = &by_speaker[*speaker];
            if pool.len() < cfg.utts_per_test_speaker {
                return Err(CorpusError::InsufficientRecords(format!(
                    "speaker {speaker} has {} usable utterances, need {}",
                    pool.len(),
                    cfg.utts_per_test_speaker
                )));
            }
            test_indices.extend(sample_without_replacement(
                pool,
                cfg.utts_per_test_speaker,
                &mut rng,
            ));
        }
        let test_set: HashSet<usize> = test_indices.iter().copied().collect();

        let remainder: Vec<usize> = (0..self.records.len())
            .filter(|i| self.records[*i].split != Split::Excluded && !test_set.contains(i))
            .collect();
        if remainder.len() < cfg.valid_size {
            return Err(CorpusError::InsufficientRecords(format!(
                "{} records left after the test split, need {} for validation",
                remainder.len(),
                cfg.valid_size
            )));
        }
        let valid_set: HashSet<usize> =
            sample_without_replacement(&remainder, cfg.valid_size, &mut rng)
                .into_iter()
                .collect();

        for (i, r) in self.records.iter_mut().enumerate() {
            if r.split == Split::Excluded {
                continue;
            }
            r.split = if test_set.contains(&i) {
                Split::Test
            } else if valid_set.contains(&i) {
                Split::Valid
            } else {
                Split::Train
            };
        }
        Ok(())
    }
}

/// Partial Fisher-Yates draw of `k` items.
fn sample_without_replacement<T: Copy>(pool: &[T], k: usize, rng: &mut ChaCha8Rng) -> Vec<T> {
    debug_assert!(k <= pool.len());
    let mut items = pool.to_vec();
    for i in 0..k {
        let j = rng.random_range(i..items.len());
        items.swap(i, j);
    }
    items.truncate(k);
    items
}

/// Read a JSONL manifest, one record per line. Reports the offending
/// line number for parse failures, non-positive durations, and duplicate
/// ids.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest, CorpusError> {
    let text = fs::read_to_string(path)?;
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (lineno, line) in text.lines().enumerate() {
        let line_num = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: UtteranceRecord =
            serde_json::from_str(line).map_err(|e| CorpusError::MalformedRecord {
                line: line_num,
                reason: e.to_string(),
            })?;
        if record.duration_sec <= 0.0 || !record.duration_sec.is_finite() {
            return Err(CorpusError::MalformedRecord {
                line: line_num,
                reason: format!("non-positive duration {}", record.duration_sec),
            });
        }
        if !seen.insert(record.id.clone()) {
            return Err(CorpusError::MalformedRecord {
                line: line_num,
                reason: format!("duplicate id {:?}", record.id),
            });
        }
        records.push(record);
    }
    Ok(Manifest::new(records))
}

pub fn save_manifest(m: &Manifest, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let mut out = String::new();
    for r in &m.records {
        out.push_str(&serde_json::to_string(r).expect("record serialization cannot fail"));
        out.push('\n');
    }
    let mut file = fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}
