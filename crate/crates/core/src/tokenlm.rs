//! Smoothed n-gram language model over token sequences.
//!
//! Sequences are padded with `order - 1` BOS symbols and terminated by
//! EOS. BOS only ever appears in contexts; the predicted support is the
//! token inventory plus EOS. Smoothing is either add-k or interpolated
//! Kneser-Ney with a single absolute discount, recursing through
//! continuation counts down to a uniform base distribution, so every
//! conditional sums to one and assigns positive mass everywhere.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LmError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("unknown token {0} (inventory size {1})")]
    UnknownToken(u32, usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed model file: {0}")]
    MalformedFile(String),
    #[error("unsupported model version {0}")]
    VersionMismatch(u32),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Smoothing {
    /// Additive smoothing with pseudo-count `k >= 0`. `k = 0` is the
    /// unsmoothed maximum-likelihood model (zero probabilities possible).
    AddK(f64),
    /// Interpolated Kneser-Ney with absolute discount in (0, 1).
    InterpolatedKneserNey(f64),
}

const MAGIC: &[u8; 4] = b"PPTL";
const VERSION: u32 = 1;

/// Counts for one context: successor -> count, plus the total.
#[derive(Debug, Clone, Default)]
struct ContextStats {
    successors: HashMap<u32, u64>,
    total: u64,
}

type Table = HashMap<Vec<u32>, ContextStats>;

#[derive(Debug, Clone)]
pub struct NGramModel {
    order: usize,
    base_vocab: usize,
    smoothing: Smoothing,
    pub seed: u64,
    /// Raw counts per n-gram level; `raw[k - 1]` holds level-k counts
    /// (context length k - 1). Lower levels are marginalizations of the
    /// top level: one count per predicted event.
    raw: Vec<Table>,
    /// Continuation counts for levels below the top, used by Kneser-Ney:
    /// `cont[k - 1][h][w]` is the number of distinct extensions `u` with
    /// `raw[k][u ++ h][w] > 0`.
    cont: Vec<Table>,
}

impl NGramModel {
    /// Count-based training over BOS-padded, EOS-terminated sequences.
    /// `base_vocab` is the token inventory size; all sequence tokens must
    /// be below it.
    ///
    /// ```
    /// use ppt_core::tokenlm::{NGramModel, Smoothing};
    ///
    /// let corpus = vec![vec![1, 2], vec![1, 3]];
    /// let m = NGramModel::train(&corpus, 4, 2, Smoothing::AddK(0.0), 0).unwrap();
    /// assert!((m.conditional_prob(&[1], 2) - 0.5).abs() < 1e-12);
    /// ```
    pub fn train(
        corpus: &[Vec<u32>],
        base_vocab: usize,
        order: usize,
        smoothing: Smoothing,
        seed: u64,
    ) -> Result<Self, LmError> {
        if corpus.is_empty() {
            return Err(LmError::EmptyCorpus);
        }
        if order == 0 {
            return Err(LmError::InvalidParameter("order must be >= 1".into()));
        }
        if base_vocab == 0 {
            return Err(LmError::InvalidParameter(
                "token inventory must be non-empty".into(),
            ));
        }
        validate_smoothing(smoothing)?;

        let bos = base_vocab as u32;
        let eos = base_vocab as u32 + 1;
        let mut top: Table = HashMap::new();
        for seq in corpus {
            for &t in seq {
                if t as usize >= base_vocab {
                    return Err(LmError::UnknownToken(t, base_vocab));
                }
            }
            let mut padded = vec![bos; order - 1];
            padded.extend_from_slice(seq);
            padded.push(eos);
            for i in (order - 1)..padded.len() {
                let ctx = padded[i - (order - 1)..i].to_vec();
                let stats = top.entry(ctx).or_default();
                *stats.successors.entry(padded[i]).or_insert(0) += 1;
                stats.total += 1;
            }
        }

        Ok(Self::from_top_counts(
            top, base_vocab, order, smoothing, seed,
        ))
    }

    fn from_top_counts(
        top: Table,
        base_vocab: usize,
        order: usize,
        smoothing: Smoothing,
        seed: u64,
    ) -> Self {
        // Marginalize the top level downward: each event contributes one
        // count at every level.
        let mut raw = vec![Table::new(); order];
        raw[order - 1] = top;
        for k in (1..order).rev() {
            let mut lower = Table::new();
            for (ctx, stats) in &raw[k] {
                let short = ctx[1..].to_vec();
                let entry = lower.entry(short).or_default();
                for (&w, &c) in &stats.successors {
                    *entry.successors.entry(w).or_insert(0) += c;
                    entry.total += c;
                }
            }
            raw[k - 1] = lower;
        }

        // Continuation counts: one per distinct left extension.
        let mut cont = vec![Table::new(); order.saturating_sub(1)];
        for k in 1..order {
            let mut table = Table::new();
            for (ctx, stats) in &raw[k] {
                let short = ctx[1..].to_vec();
                let entry = table.entry(short).or_default();
                for &w in stats.successors.keys() {
                    *entry.successors.entry(w).or_insert(0) += 1;
                    entry.total += 1;
                }
            }
            cont[k - 1] = table;
        }

        Self {
            order,
            base_vocab,
            smoothing,
            seed,
            raw,
            cont,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Token inventory size (PPT ids are `0..base_vocab`).
    pub fn base_vocab(&self) -> usize {
        self.base_vocab
    }

    /// Number of predictable outcomes: the inventory plus EOS.
    pub fn support_size(&self) -> usize {
        self.base_vocab + 1
    }

    /// Full symbol count including BOS and EOS.
    pub fn vocab_size(&self) -> usize {
        self.base_vocab + 2
    }

    /// Support index of the end-of-sequence outcome.
    pub fn eos_outcome(&self) -> usize {
        self.base_vocab
    }

    pub fn smoothing(&self) -> Smoothing {
        self.smoothing
    }

    fn bos_symbol(&self) -> u32 {
        self.base_vocab as u32
    }

    fn eos_symbol(&self) -> u32 {
        self.base_vocab as u32 + 1
    }

    /// BOS-pad and truncate a token context to the model's context length.
    fn canonical_context(&self, context: &[u32]) -> Vec<u32> {
        let want = self.order - 1;
        let take = context.len().min(want);
        let mut ctx = vec![self.bos_symbol(); want - take];
        ctx.extend_from_slice(&context[context.len() - take..]);
        ctx
    }

    /// P(outcome | context), where `outcome` indexes the support
    /// (`0..base_vocab` are tokens, `base_vocab` is EOS) and `context`
    /// holds plain token ids, most recent last.
    pub fn conditional_prob(&self, context: &[u32], outcome: usize) -> f64 {
        debug_assert!(outcome < self.support_size());
        let symbol = if outcome == self.eos_outcome() {
            self.eos_symbol()
        } else {
            outcome as u32
        };
        let ctx = self.canonical_context(context);
        match self.smoothing {
            Smoothing::AddK(k) => self.addk_prob(&ctx, symbol, k),
            Smoothing::InterpolatedKneserNey(d) => self.kn_prob(self.order, &ctx, symbol, d),
        }
    }

    fn addk_prob(&self, ctx: &[u32], symbol: u32, k: f64) -> f64 {
        let s = self.support_size() as f64;
        let (count, total) = match self.raw[self.order - 1].get(ctx) {
            Some(stats) => (
                stats.successors.get(&symbol).copied().unwrap_or(0) as f64,
                stats.total as f64,
            ),
            None => (0.0, 0.0),
        };
        if total == 0.0 && k == 0.0 {
            // Unseen context under the unsmoothed model: uniform.
            return 1.0 / s;
        }
        (count + k) / (total + k * s)
    }

    /// Interpolated Kneser-Ney, recursing from `level` n-grams down to a
    /// uniform base. The top level uses raw counts, lower levels use
    /// continuation counts; contexts with no mass back off entirely.
    fn kn_prob(&self, level: usize, ctx: &[u32], symbol: u32, discount: f64) -> f64 {
        if level == 0 {
            return 1.0 / self.support_size() as f64;
        }
        let table = if level == self.order {
            &self.raw[level - 1]
        } else {
            &self.cont[level - 1]
        };
        let key = &ctx[ctx.len() - (level - 1)..];
        match table.get(key) {
            None => self.kn_prob(level - 1, ctx, symbol, discount),
            Some(stats) if stats.total == 0 => self.kn_prob(level - 1, ctx, symbol, discount),
            Some(stats) => {
                let total = stats.total as f64;
                let count = stats.successors.get(&symbol).copied().unwrap_or(0) as f64;
                let distinct = stats.successors.len() as f64;
                let lambda = discount * distinct / total;
                (count - discount).max(0.0) / total
                    + lambda * self.kn_prob(level - 1, ctx, symbol, discount)
            }
        }
    }

    /// The full next-outcome distribution for a context, sharpened by
    /// `temperature` (`p^(1/T)`, renormalized). Temperatures are clamped
    /// below at 1e-6, where the distribution degenerates to the argmax.
    pub fn next_token_distribution(&self, context: &[u32], temperature: f64) -> Vec<f64> {
        let t = temperature.max(1e-6);
        let probs: Vec<f64> = (0..self.support_size())
            .map(|o| self.conditional_prob(context, o))
            .collect();
        let max_log = probs
            .iter()
            .map(|&p| {
                if p > 0.0 {
                    p.ln() / t
                } else {
                    f64::NEG_INFINITY
                }
            })
            .fold(f64::NEG_INFINITY, f64::max);
        if max_log == f64::NEG_INFINITY {
            // Degenerate all-zero row (unsmoothed model, impossible context).
            let s = self.support_size() as f64;
            return vec![1.0 / s; self.support_size()];
        }
        let mut out: Vec<f64> = probs
            .iter()
            .map(|&p| {
                if p > 0.0 {
                    (p.ln() / t - max_log).exp()
                } else {
                    0.0
                }
            })
            .collect();
        let norm: f64 = out.iter().sum();
        out.iter_mut().for_each(|v| *v /= norm);
        out
    }

    /// Sum of event log-probabilities for a sequence, including the
    /// terminal EOS event. Always `<= 0`.
    pub fn log_prob(&self, seq: &[u32]) -> Result<f64, LmError> {
        for &t in seq {
            if t as usize >= self.base_vocab {
                return Err(LmError::UnknownToken(t, self.base_vocab));
            }
        }
        let mut total = 0.0;
        for i in 0..=seq.len() {
            let outcome = if i == seq.len() {
                self.eos_outcome()
            } else {
                seq[i] as usize
            };
            let p = self.conditional_prob(&seq[..i], outcome);
            total += if p > 0.0 { p.ln() } else { f64::NEG_INFINITY };
        }
        Ok(total)
    }

    /// exp(-(sum of log-probs) / N) where N counts every predicted event:
    /// all tokens plus one EOS per sequence.
    pub fn perplexity(&self, test: &[Vec<u32>]) -> Result<f64, LmError> {
        if test.is_empty() {
            return Err(LmError::EmptyCorpus);
        }
        let mut log_sum = 0.0;
        let mut events = 0usize;
        for seq in test {
            log_sum += self.log_prob(seq)?;
            events += seq.len() + 1;
        }
        Ok((-log_sum / events as f64).exp())
    }

    /// Ancestral sampling at the given temperature; stops at EOS or after
    /// `max_len` tokens. Deterministic for a fixed seed.
    pub fn sample(&self, temperature: f64, max_len: usize, seed: u64) -> Vec<u32> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out: Vec<u32> = Vec::new();
        while out.len() < max_len {
            let dist = self.next_token_distribution(&out, temperature);
            let outcome = draw(&dist, rng.random::<f64>());
            if outcome == self.eos_outcome() {
                break;
            }
            out.push(outcome as u32);
        }
        out
    }

    /// `count` independent samples under per-sequence sub-seeds derived
    /// from `seed`.
    pub fn generate_batch(
        &self,
        count: usize,
        temperature: f64,
        max_len: usize,
        seed: u64,
    ) -> Vec<Vec<u32>> {
        (0..count)
            .map(|i| self.sample(temperature, max_len, derive_seed(seed, i as u64)))
            .collect()
    }

    /// Model file: magic `PPTL`, u32 version, u32 order, u32 base_vocab,
    /// u8 smoothing tag, f64 smoothing param, u64 seed, u64 entry count,
    /// then fixed-width top-level entries `(order-1) x u32 context,
    /// u32 token, u64 count`, sorted.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), LmError> {
        let mut entries: Vec<(Vec<u32>, u32, u64)> = Vec::new();
        for (ctx, stats) in &self.raw[self.order - 1] {
            for (&w, &c) in &stats.successors {
                entries.push((ctx.clone(), w, c));
            }
        }
        entries.sort();

        let (tag, param) = match self.smoothing {
            Smoothing::AddK(k) => (0u8, k),
            Smoothing::InterpolatedKneserNey(d) => (1u8, d),
        };
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.order as u32).to_le_bytes());
        out.extend_from_slice(&(self.base_vocab as u32).to_le_bytes());
        out.push(tag);
        out.extend_from_slice(&param.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&(entries.len() as u64).to_le_bytes());
        for (ctx, w, c) in &entries {
            for &s in ctx {
                out.extend_from_slice(&s.to_le_bytes());
            }
            out.extend_from_slice(&w.to_le_bytes());
            out.extend_from_slice(&c.to_le_bytes());
        }
        let mut file = fs::File::create(path)?;
        file.write_all(&out)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LmError> {
        let bytes = fs::read(path)?;
        if bytes.len() < 41 {
            return Err(LmError::MalformedFile("file too short".into()));
        }
        if &bytes[0..4] != MAGIC {
            return Err(LmError::MalformedFile("bad magic".into()));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(LmError::VersionMismatch(version));
        }
        let order = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let base_vocab = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        if order == 0 || base_vocab == 0 {
            return Err(LmError::MalformedFile("zero order or vocabulary".into()));
        }
        let smoothing = match bytes[16] {
            0 => Smoothing::AddK(f64::from_le_bytes(bytes[17..25].try_into().unwrap())),
            1 => Smoothing::InterpolatedKneserNey(f64::from_le_bytes(
                bytes[17..25].try_into().unwrap(),
            )),
            t => return Err(LmError::MalformedFile(format!("bad smoothing tag {t}"))),
        };
        validate_smoothing(smoothing)
            .map_err(|_| LmError::MalformedFile("bad smoothing parameter".into()))?;
        let seed = u64::from_le_bytes(bytes[25..33].try_into().unwrap());
        let n_entries = u64::from_le_bytes(bytes[33..41].try_into().unwrap()) as usize;

        let entry_width = (order - 1) * 4 + 4 + 8;
        let payload = &bytes[41..];
        if payload.len() != n_entries * entry_width {
            return Err(LmError::MalformedFile(format!(
                "payload {} bytes, expected {}",
                payload.len(),
                n_entries * entry_width
            )));
        }
        let max_symbol = base_vocab as u32 + 1;
        let mut top: Table = HashMap::new();
        for entry in payload.chunks_exact(entry_width) {
            let mut ctx = Vec::with_capacity(order - 1);
            for i in 0..order - 1 {
                let s = u32::from_le_bytes(entry[i * 4..i * 4 + 4].try_into().unwrap());
                if s > max_symbol {
                    return Err(LmError::MalformedFile(format!("symbol {s} out of range")));
                }
                ctx.push(s);
            }
            let off = (order - 1) * 4;
            let w = u32::from_le_bytes(entry[off..off + 4].try_into().unwrap());
            if w > max_symbol {
                return Err(LmError::MalformedFile(format!("symbol {w} out of range")));
            }
            let c = u64::from_le_bytes(entry[off + 4..off + 12].try_into().unwrap());
            if c == 0 {
                return Err(LmError::MalformedFile("zero n-gram count".into()));
            }
            let stats = top.entry(ctx).or_default();
            *stats.successors.entry(w).or_insert(0) += c;
            stats.total += c;
        }
        Ok(Self::from_top_counts(
            top, base_vocab, order, smoothing, seed,
        ))
    }
}

fn validate_smoothing(smoothing: Smoothing) -> Result<(), LmError> {
    match smoothing {
        Smoothing::AddK(k) if k >= 0.0 && k.is_finite() => Ok(()),
        Smoothing::InterpolatedKneserNey(d) if d > 0.0 && d < 1.0 => Ok(()),
        _ => Err(LmError::InvalidParameter(format!(
            "bad smoothing {smoothing:?}"
        ))),
    }
}

fn draw(dist: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &p) in dist.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    dist.len() - 1
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Distinct, reproducible per-sample seed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(1)))
}
