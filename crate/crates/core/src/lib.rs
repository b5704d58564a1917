//! Pipeline toolkit for representing nonverbal vocalizations as pseudo
//! phonetic tokens (PPTs): discrete cluster indices over frame-level
//! acoustic features, with run lengths as durations.
//!
//! The crate covers the full desk-scale pipeline:
//!
//! - [`dsp`] — WAV ingestion, resampling, log-mel / mel-cepstral features
//!   at 50 fps, and YIN-style pitch tracking.
//! - [`quantizer`] — mini-batch k-means codebook training and
//!   nearest-centroid assignment.
//! - [`tokenizer`] — run-length deduplication of frame label sequences
//!   into token/duration pairs, plus the token file format.
//! - [`tokenlm`] — smoothed n-gram language model over token sequences
//!   with perplexity and temperature sampling.
//! - [`metrics`] — DTW, mel-cepstral distortion, F0-RMSE, BLEU,
//!   Self-BLEU, and normalized Self-BLEU.
//! - [`corpus`] — JSONL utterance manifests, duration/pitch filtering,
//!   and speaker-based split construction.

pub mod corpus;
pub mod dsp;
pub mod metrics;
pub mod quantizer;
pub mod tokenizer;
pub mod tokenlm;

pub use dsp::{FeatureKind, FeatureMatrix, PitchTrack, Waveform};
pub use quantizer::Codebook;
pub use tokenizer::TokenSequence;
pub use tokenlm::NGramModel;
