//! Run-length tokenization: collapse per-frame cluster indices into a
//! deduplicated token sequence with per-token frame durations.

use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::dsp::FeatureMatrix;
use crate::quantizer::{assign, Codebook, QuantizerError};

#[derive(Debug, Error)]
pub enum TokenizerError {
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("malformed token file at line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A deduplicated token sequence. No two consecutive tokens are equal,
/// every duration is at least one frame, and durations sum to
/// `total_frames`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    pub tokens: Vec<u32>,
    pub durations: Vec<u32>,
    pub total_frames: usize,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn validate(&self) -> Result<(), TokenizerError> {
        if self.tokens.len() != self.durations.len() {
            return Err(TokenizerError::InvariantViolation(format!(
                "{} tokens but {} durations",
                self.tokens.len(),
                self.durations.len()
            )));
        }
        if self.durations.contains(&0) {
            return Err(TokenizerError::InvariantViolation(
                "zero-frame duration".into(),
            ));
        }
        if self.tokens.windows(2).any(|w| w[0] == w[1]) {
            return Err(TokenizerError::InvariantViolation(
                "consecutive duplicate tokens".into(),
            ));
        }
        let sum: u64 = self.durations.iter().map(|&d| d as u64).sum();
        if sum != self.total_frames as u64 {
            return Err(TokenizerError::InvariantViolation(format!(
                "durations sum to {sum}, total_frames is {}",
                self.total_frames
            )));
        }
        Ok(())
    }
}

/// Collapse maximal runs of identical frame labels.
///
/// ```
/// use ppt_core::tokenizer::rle_encode;
///
/// let ts = rle_encode(&[21, 21, 34, 21]);
/// assert_eq!(ts.tokens, vec![21, 34, 21]);
/// assert_eq!(ts.durations, vec![2, 1, 1]);
/// ```
pub fn rle_encode(frames: &[u32]) -> TokenSequence {
    let mut tokens = Vec::new();
    let mut durations: Vec<u32> = Vec::new();
    for &f in frames {
        match tokens.last() {
            Some(&last) if last == f => *durations.last_mut().unwrap() += 1,
            _ => {
                tokens.push(f);
                durations.push(1);
            }
        }
    }
    TokenSequence {
        tokens,
        durations,
        total_frames: frames.len(),
    }
}

/// Inverse of [`rle_encode`]; rejects sequences violating the
/// [`TokenSequence`] invariants.
pub fn rle_expand(ts: &TokenSequence) -> Result<Vec<u32>, TokenizerError> {
    ts.validate()?;
    let mut frames = Vec::with_capacity(ts.total_frames);
    for (&t, &d) in ts.tokens.iter().zip(&ts.durations) {
        frames.extend(std::iter::repeat_n(t, d as usize));
    }
    Ok(frames)
}

/// Assign every frame to its nearest centroid, then deduplicate runs.
/// Non-empty features always produce a non-empty sequence.
pub fn tokenize_utterance(
    cb: &Codebook,
    features: &FeatureMatrix,
) -> Result<TokenSequence, QuantizerError> {
    Ok(rle_encode(&assign(cb, features)?))
}

/// One line of a token file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenFileEntry {
    pub id: String,
    pub tokens: Vec<u32>,
    pub durations: Option<Vec<u32>>,
}

impl TokenFileEntry {
    pub fn from_sequence(id: impl Into<String>, ts: &TokenSequence) -> Self {
        Self {
            id: id.into(),
            tokens: ts.tokens.clone(),
            durations: Some(ts.durations.clone()),
        }
    }

    pub fn to_sequence(&self) -> Result<TokenSequence, TokenizerError> {
        let durations = self.durations.clone().ok_or_else(|| {
            TokenizerError::InvariantViolation(format!("entry {} has no durations", self.id))
        })?;
        let total_frames = durations.iter().map(|&d| d as usize).sum();
        let ts = TokenSequence {
            tokens: self.tokens.clone(),
            durations,
            total_frames,
        };
        ts.validate()?;
        Ok(ts)
    }
}

/// Write a token file: one utterance per line,
/// `<utt_id>\t<token,dur token,dur ...>`, or `<utt_id>\t<token token ...>`
/// when `with_durations` is false (the LM-facing form).
pub fn write_token_file(
    path: impl AsRef<Path>,
    entries: &[TokenFileEntry],
    with_durations: bool,
) -> Result<(), TokenizerError> {
    let mut out = String::new();
    for e in entries {
        out.push_str(&e.id);
        out.push('\t');
        if with_durations {
            let durations = e.durations.as_ref().ok_or_else(|| {
                TokenizerError::InvariantViolation(format!("entry {} has no durations", e.id))
            })?;
            if durations.len() != e.tokens.len() {
                return Err(TokenizerError::InvariantViolation(format!(
                    "entry {}: {} tokens but {} durations",
                    e.id,
                    e.tokens.len(),
                    durations.len()
                )));
            }
            let fields: Vec<String> = e
                .tokens
                .iter()
                .zip(durations)
                .map(|(t, d)| format!("{t},{d}"))
                .collect();
            out.push_str(&fields.join(" "));
        } else {
            let fields: Vec<String> = e.tokens.iter().map(|t| t.to_string()).collect();
            out.push_str(&fields.join(" "));
        }
        out.push('\n');
    }
    let mut file = fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

/// Read either token file form; the duration variant is detected per line
/// by the presence of `,`.
pub fn read_token_file(path: impl AsRef<Path>) -> Result<Vec<TokenFileEntry>, TokenizerError> {
    let text = fs::read_to_string(path)?;
    let mut entries = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line_num = lineno + 1;
        if line.is_empty() {
            continue;
        }
        let (id, rest) = line
            .split_once('\t')
            .ok_or_else(|| TokenizerError::Malformed {
                line: line_num,
                reason: "missing tab separator".into(),
            })?;
        if id.is_empty() {
            return Err(TokenizerError::Malformed {
                line: line_num,
                reason: "empty utterance id".into(),
            });
        }
        let mut tokens = Vec::new();
        let mut durations = Vec::new();
        let mut has_durations = false;
        for field in rest.split_whitespace() {
            if let Some((t, d)) = field.split_once(',') {
                has_durations = true;
                tokens.push(parse_u32(t, line_num)?);
                durations.push(parse_u32(d, line_num)?);
            } else {
                tokens.push(parse_u32(field, line_num)?);
            }
        }
        if has_durations && durations.len() != tokens.len() {
            return Err(TokenizerError::Malformed {
                line: line_num,
                reason: "mixed duration and bare-token fields".into(),
            });
        }
        entries.push(TokenFileEntry {
            id: id.to_string(),
            tokens,
            durations: has_durations.then_some(durations),
        });
    }
    Ok(entries)
}

fn parse_u32(s: &str, line: usize) -> Result<u32, TokenizerError> {
    s.parse().map_err(|_| TokenizerError::Malformed {
        line,
        reason: format!("bad integer {s:?}"),
    })
}
