//! Objective evaluation: DTW alignment, mel-cepstral distortion,
//! F0-RMSE, BLEU / Self-BLEU, and the normalized Self-BLEU ratio.

mod bleu;
mod dtw;
mod mcd;

pub use bleu::{bleu, normalized_self_bleu, self_bleu, BleuReport, BLEU_EPSILON};
pub use dtw::{dtw, DtwAlignment, LocalDistance};
pub use mcd::{f0_rmse, mcd};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("frame count mismatch: {0}")]
    FrameCountMismatch(String),
    #[error("no DTW-aligned frame pair is voiced on both sides")]
    NoVoicedOverlap,
    #[error("BLEU candidate is empty")]
    EmptyCandidate,
    #[error("BLEU reference set is empty")]
    EmptyReferenceSet,
    #[error("corpus of {0} sentences is too small for Self-BLEU")]
    CorpusTooSmall(usize),
    #[error("ground-truth Self-BLEU is zero")]
    DegenerateGroundTruth,
}

/// The flat evaluation summary emitted by the CLI, as JSON and as
/// key/value text. Fields are absent when the corresponding inputs were
/// not provided.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mcd_db: Option<f64>,
    pub f0_rmse_hz: Option<f64>,
    pub ppl: Option<f64>,
    pub self_bleu: Option<f64>,
    pub self_bleu_gt: Option<f64>,
    pub normalized_self_bleu: Option<f64>,
    /// Utterance pairs skipped because no aligned frame pair was voiced
    /// on both sides.
    pub skipped_no_voiced_overlap: usize,
    /// Generated sequences dropped from BLEU scoring for being empty.
    pub skipped_empty_generated: usize,
    /// Flag raised when generations are less diverse than the ground truth.
    pub normalized_exceeds_unity: bool,
    /// Conventions baked into the numbers above.
    pub mcd_excludes_c0: bool,
    pub bleu_smoothing_epsilon: f64,
}

impl MetricsReport {
    pub fn new() -> Self {
        Self {
            mcd_excludes_c0: true,
            bleu_smoothing_epsilon: BLEU_EPSILON,
            ..Default::default()
        }
    }

    /// `key\tvalue` lines; absent metrics are omitted.
    pub fn to_kv_text(&self) -> String {
        let mut out = String::new();
        let mut push = |key: &str, value: Option<f64>| {
            if let Some(v) = value {
                out.push_str(&format!("{key}\t{v}\n"));
            }
        };
        push("mcd_db", self.mcd_db);
        push("f0_rmse_hz", self.f0_rmse_hz);
        push("ppl", self.ppl);
        push("self_bleu", self.self_bleu);
        push("self_bleu_gt", self.self_bleu_gt);
        push("normalized_self_bleu", self.normalized_self_bleu);
        out.push_str(&format!(
            "skipped_no_voiced_overlap\t{}\n",
            self.skipped_no_voiced_overlap
        ));
        out.push_str(&format!(
            "skipped_empty_generated\t{}\n",
            self.skipped_empty_generated
        ));
        out.push_str(&format!(
            "normalized_exceeds_unity\t{}\n",
            self.normalized_exceeds_unity
        ));
        out.push_str(&format!("mcd_excludes_c0\t{}\n", self.mcd_excludes_c0));
        out.push_str(&format!(
            "bleu_smoothing_epsilon\t{}\n",
            self.bleu_smoothing_epsilon
        ));
        out
    }
}
