//! Audio ingestion and frame-level feature extraction.
//!
//! Every extractor obeys the frame-count law: a waveform of `n` samples
//! analyzed at hop `h` yields exactly `ceil(n / h)` frames (center-padded
//! framing), so 1 s of 16 kHz audio at hop 320 gives 50 frames.

mod mel;
mod pitch;
mod pptf;
mod resample;
mod wav;

pub use mel::{
    dct_ii_orthonormal, hz_to_mel, idct_orthonormal, mel_cepstra, mel_filterbank, mel_spectrogram,
    mel_to_hz, MelConfig,
};
pub use pitch::{extract_f0, PitchConfig};
pub use resample::resample;
pub use wav::{load_wav, write_wav_f32, write_wav_i16};

use thiserror::Error;

/// Errors produced by the audio and feature-extraction layer.
#[derive(Debug, Error)]
pub enum DspError {
    #[error("malformed WAV file: {0}")]
    MalformedWav(String),
    #[error("unsupported WAV encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("invalid configuration: {0}")]
    ConfigError(String),
    #[error("malformed feature file: {0}")]
    MalformedFeatureFile(String),
    #[error("unsupported feature file version {0}")]
    VersionMismatch(u32),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A mono audio signal with samples normalized to `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Self {
        Self {
            samples,
            sample_rate,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Duration in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// What a [`FeatureMatrix`] holds. Stored as one byte in the PPTF format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    MelSpectrogram,
    MelCepstra,
    /// Features computed outside this crate (e.g. per-layer SSL dumps)
    /// and ingested through the PPTF file format.
    External,
}

impl FeatureKind {
    pub fn as_u8(self) -> u8 {
        match self {
            FeatureKind::MelSpectrogram => 0,
            FeatureKind::MelCepstra => 1,
            FeatureKind::External => 2,
        }
    }

    pub fn from_u8(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(FeatureKind::MelSpectrogram),
            1 => Some(FeatureKind::MelCepstra),
            2 => Some(FeatureKind::External),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::MelSpectrogram => "mel_spectrogram",
            FeatureKind::MelCepstra => "mel_cepstra",
            FeatureKind::External => "external",
        }
    }
}

/// A T×D matrix of frame-level features, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
    pub frame_rate: f64,
    pub kind: FeatureKind,
    /// Hop in samples when produced from a waveform; 0 when unknown
    /// (externally supplied features).
    pub hop: u32,
}

impl FeatureMatrix {
    /// Build from flat row-major data. Panics if `data.len()` is not a
    /// multiple of `cols` (a construction bug, not a runtime condition).
    pub fn from_flat(
        data: Vec<f64>,
        cols: usize,
        frame_rate: f64,
        kind: FeatureKind,
        hop: u32,
    ) -> Self {
        assert!(cols > 0, "feature dimension must be positive");
        assert_eq!(data.len() % cols, 0, "flat data not a multiple of cols");
        let rows = data.len() / cols;
        Self {
            data,
            rows,
            cols,
            frame_rate,
            kind,
            hop,
        }
    }

    pub fn from_rows(rows: &[Vec<f64>], frame_rate: f64, kind: FeatureKind, hop: u32) -> Self {
        let cols = rows.first().map(|r| r.len()).unwrap_or(1);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged feature rows");
            data.extend_from_slice(r);
        }
        Self::from_flat(data, cols, frame_rate, kind, hop)
    }

    /// Number of frames (T).
    pub fn num_frames(&self) -> usize {
        self.rows
    }

    /// Feature dimension (D).
    pub fn dim(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.cols..(t + 1) * self.cols]
    }

    pub fn rows_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Copy of the matrix restricted to a column range. Used e.g. to drop
    /// the energy coefficient before clustering or alignment.
    pub fn select_columns(&self, range: std::ops::Range<usize>) -> FeatureMatrix {
        assert!(range.end <= self.cols);
        let cols = range.len();
        let mut data = Vec::with_capacity(self.rows * cols);
        for r in self.rows_iter() {
            data.extend_from_slice(&r[range.clone()]);
        }
        FeatureMatrix::from_flat(data, cols, self.frame_rate, self.kind, self.hop)
    }

    /// Read from the PPTF binary format.
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, DspError> {
        pptf::read_pptf(path.as_ref())
    }

    /// Write in the PPTF binary format (payload stored as f32).
    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<(), DspError> {
        pptf::write_pptf(self, path.as_ref())
    }
}

/// Per-frame fundamental-frequency track. `f0[t]` is 0 exactly when
/// `voiced[t]` is false.
#[derive(Debug, Clone, PartialEq)]
pub struct PitchTrack {
    pub f0: Vec<f64>,
    pub voiced: Vec<bool>,
    pub frame_rate: f64,
    /// Which tracker produced the estimates.
    pub tracker: &'static str,
}

impl PitchTrack {
    pub fn len(&self) -> usize {
        self.f0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f0.is_empty()
    }

    /// True if any frame is voiced (the corpus-filter criterion for
    /// "can get pitch values").
    pub fn any_voiced(&self) -> bool {
        self.voiced.iter().any(|&v| v)
    }
}

/// The frame-count law shared by all extractors: `ceil(n / hop)`.
pub(crate) fn frame_count(num_samples: usize, hop: usize) -> usize {
    num_samples.div_ceil(hop)
}
