//! BLEU over token sequences, Self-BLEU, and the normalized ratio
//! against a ground-truth corpus.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::MetricsError;

/// Numerator substituted for zero-count n-gram precisions.
pub const BLEU_EPSILON: f64 = 1e-9;

/// Corpus-level diversity summary.
///
/// `normalized` is the raw ratio `self_bleu / self_bleu_gt`; it exceeds 1
/// when generations are less diverse than the ground truth and is
/// reported as-is (see [`BleuReport::exceeds_unity`]).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BleuReport {
    pub per_sentence_bleu: Vec<f64>,
    pub self_bleu: f64,
    pub self_bleu_gt: f64,
    pub normalized: f64,
    /// Smoothing convention used for zero-count precisions.
    pub smoothing_epsilon: f64,
}

impl BleuReport {
    pub fn exceeds_unity(&self) -> bool {
        self.normalized > 1.0
    }
}

/// Modified n-gram precision BLEU with brevity penalty, uniform weights
/// over orders `1..=max_n`. Orders longer than the candidate are skipped;
/// zero-count precisions get an epsilon numerator.
pub fn bleu(candidate: &[u32], references: &[&[u32]], max_n: usize) -> Result<f64, MetricsError> {
    if candidate.is_empty() {
        return Err(MetricsError::EmptyCandidate);
    }
    if references.is_empty() {
        return Err(MetricsError::EmptyReferenceSet);
    }
    let max_n = max_n.max(1);

    let mut log_sum = 0.0;
    let mut orders_used = 0usize;
    for n in 1..=max_n {
        if candidate.len() < n {
            break;
        }
        let cand_counts = ngram_counts(candidate, n);
        let denom = (candidate.len() - n + 1) as f64;
        let mut clipped = 0u64;
        for (gram, &count) in &cand_counts {
            let best_ref = references
                .iter()
                .map(|r| r.windows(n).filter(|w| w == gram).count() as u64)
                .max()
                .unwrap_or(0);
            clipped += count.min(best_ref);
        }
        let numerator = if clipped > 0 {
            clipped as f64
        } else {
            BLEU_EPSILON
        };
        log_sum += (numerator / denom).ln();
        orders_used += 1;
    }

    let precision = (log_sum / orders_used as f64).exp();

    // Brevity penalty against the closest reference length (ties to the
    // shorter one).
    let c_len = candidate.len();
    let mut r_len = references[0].len();
    for reference in &references[1..] {
        let len = reference.len();
        if len.abs_diff(c_len) < r_len.abs_diff(c_len)
            || (len.abs_diff(c_len) == r_len.abs_diff(c_len) && len < r_len)
        {
            r_len = len;
        }
    }
    let (c, r) = (c_len as f64, r_len as f64);
    let bp = if c >= r { 1.0 } else { (1.0 - r / c).exp() };

    Ok(bp * precision)
}

fn ngram_counts(seq: &[u32], n: usize) -> HashMap<&[u32], u64> {
    let mut counts: HashMap<&[u32], u64> = HashMap::new();
    for gram in seq.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// Mean BLEU of each sentence against the rest of the corpus.
pub fn self_bleu(corpus: &[Vec<u32>], max_n: usize) -> Result<f64, MetricsError> {
    Ok(mean(&per_sentence_self_bleu(corpus, max_n)?))
}

fn per_sentence_self_bleu(corpus: &[Vec<u32>], max_n: usize) -> Result<Vec<f64>, MetricsError> {
    if corpus.len() < 2 {
        return Err(MetricsError::CorpusTooSmall(corpus.len()));
    }
    let mut scores = Vec::with_capacity(corpus.len());
    for (i, sentence) in corpus.iter().enumerate() {
        let rest: Vec<&[u32]> = corpus
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, s)| s.as_slice())
            .collect();
        scores.push(bleu(sentence, &rest, max_n)?);
    }
    Ok(scores)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Self-BLEU of the generated corpus normalized by the ground truth's.
pub fn normalized_self_bleu(
    generated: &[Vec<u32>],
    ground_truth: &[Vec<u32>],
    max_n: usize,
) -> Result<BleuReport, MetricsError> {
    let per_sentence = per_sentence_self_bleu(generated, max_n)?;
    let generated_score = mean(&per_sentence);
    let gt_score = self_bleu(ground_truth, max_n)?;
    if gt_score <= 0.0 {
        return Err(MetricsError::DegenerateGroundTruth);
    }
    Ok(BleuReport {
        per_sentence_bleu: per_sentence,
        self_bleu: generated_score,
        self_bleu_gt: gt_score,
        normalized: generated_score / gt_score,
        smoothing_epsilon: BLEU_EPSILON,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_match_scores_one() {
        let s = vec![4u32, 2, 4, 9, 1];
        assert_eq!(bleu(&s, &[&s], 4).unwrap(), 1.0);
        // Short candidates use only the orders they support.
        let two = vec![3u32, 5];
        assert_eq!(bleu(&two, &[&two], 4).unwrap(), 1.0);
    }

    #[test]
    fn disjoint_vocabulary_is_epsilon_scale() {
        let cand = vec![1u32, 2, 3, 4];
        let reference = vec![10u32, 11, 12, 13];
        let score = bleu(&cand, &[&reference], 4).unwrap();
        assert!(score > 0.0);
        assert!(score < 1e-8, "score {score}");
    }

    #[test]
    fn hand_computed_precisions() {
        // Unigrams 1,2,3 match (p1 = 3/4); bigrams (1,2),(2,3) match out
        // of three (p2 = 2/3); of the two trigrams only (1,2,3) matches
        // (p3 = 1/2); the single 4-gram misses (p4 = eps); BP = 1.
        let cand = vec![1u32, 2, 3, 4];
        let reference = vec![1u32, 2, 3, 5];
        let expected = ((3.0f64 / 4.0).ln() / 4.0
            + (2.0f64 / 3.0).ln() / 4.0
            + (1.0f64 / 2.0).ln() / 4.0
            + BLEU_EPSILON.ln() / 4.0)
            .exp();
        let got = bleu(&cand, &[&reference], 4).unwrap();
        assert!((got - expected).abs() < 1e-6, "{got} vs {expected}");
    }

    #[test]
    fn brevity_penalty_applies_to_short_candidates() {
        // Candidate is a 2-token prefix of a 4-token reference:
        // p1 = p2 = 1, BP = exp(1 - 4/2).
        let cand = vec![1u32, 2];
        let reference = vec![1u32, 2, 3, 4];
        let got = bleu(&cand, &[&reference], 2).unwrap();
        let expected = (1.0f64 - 2.0).exp();
        assert!((got - expected).abs() < 1e-9);
    }

    #[test]
    fn clipping_caps_repeated_ngrams() {
        // Candidate repeats a unigram beyond its reference count.
        let cand = vec![7u32, 7, 7, 7];
        let reference = vec![7u32, 1, 2, 3];
        let got = bleu(&cand, &[&reference], 1).unwrap();
        assert!((got - 0.25).abs() < 1e-9);
    }

    #[test]
    fn empty_inputs_rejected() {
        let s = vec![1u32, 2];
        assert!(matches!(
            bleu(&[], &[&s], 4),
            Err(MetricsError::EmptyCandidate)
        ));
        assert!(matches!(
            bleu(&s, &[], 4),
            Err(MetricsError::EmptyReferenceSet)
        ));
    }

    #[test]
    fn identical_corpus_self_bleu_is_one() {
        let corpus = vec![vec![1u32, 2, 3, 4, 5]; 6];
        assert_eq!(self_bleu(&corpus, 4).unwrap(), 1.0);
    }

    #[test]
    fn disjoint_corpus_self_bleu_near_zero() {
        let corpus = vec![
            vec![1u32, 2, 3, 4],
            vec![10u32, 11, 12, 13],
            vec![20u32, 21, 22, 23],
        ];
        assert!(self_bleu(&corpus, 4).unwrap() < 1e-8);
    }

    #[test]
    fn three_sentence_toy_corpus_hand_check() {
        // s0 = [1,2,3], s1 = [1,2,4], s2 = [9,9,9,9].
        let corpus = vec![vec![1u32, 2, 3], vec![1u32, 2, 4], vec![9u32, 9, 9, 9]];

        // BLEU(s0 | {s1, s2}): p1 = 2/3, p2 = 1/2, p3 = eps; BP: closest
        // reference length is 3 -> BP = 1.
        let b0 = ((2.0f64 / 3.0).ln() / 3.0 + 0.5f64.ln() / 3.0 + BLEU_EPSILON.ln() / 3.0).exp();
        // Symmetric for s1.
        let b1 = b0;
        // BLEU(s2 | {s0, s1}): no overlap at any order; candidate length 4,
        // closest reference length 3 -> BP = 1 (candidate longer).
        let b2 = ((BLEU_EPSILON / 4.0).ln() / 4.0
            + (BLEU_EPSILON / 3.0).ln() / 4.0
            + (BLEU_EPSILON / 2.0).ln() / 4.0
            + BLEU_EPSILON.ln() / 4.0)
            .exp();
        let expected = (b0 + b1 + b2) / 3.0;

        let got = self_bleu(&corpus, 4).unwrap();
        assert!((got - expected).abs() < 1e-6, "{got} vs {expected}");
    }

    #[test]
    fn corpus_too_small_rejected() {
        assert!(matches!(
            self_bleu(&[vec![1, 2, 3]], 4),
            Err(MetricsError::CorpusTooSmall(1))
        ));
    }

    #[test]
    fn scores_stay_in_unit_interval() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let len = rng.random_range(1..12);
            let cand: Vec<u32> = (0..len).map(|_| rng.random_range(0..6)).collect();
            let refs: Vec<Vec<u32>> = (0..rng.random_range(1..4))
                .map(|_| {
                    (0..rng.random_range(1..12))
                        .map(|_| rng.random_range(0..6))
                        .collect()
                })
                .collect();
            let ref_slices: Vec<&[u32]> = refs.iter().map(|r| r.as_slice()).collect();
            let score = bleu(&cand, &ref_slices, 4).unwrap();
            assert!((0.0..=1.0).contains(&score), "bleu {score} out of range");
        }
    }

    #[test]
    fn self_bleu_invariant_under_permutation() {
        let corpus = vec![
            vec![1u32, 2, 3, 1, 2],
            vec![2u32, 3, 1],
            vec![1u32, 1, 2, 2],
            vec![3u32, 2, 1, 3],
        ];
        let mut reversed = corpus.clone();
        reversed.reverse();
        let a = self_bleu(&corpus, 4).unwrap();
        let b = self_bleu(&reversed, 4).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn normalized_ratio_of_corpus_with_itself_is_one() {
        let corpus = vec![
            vec![1u32, 2, 3, 4],
            vec![2u32, 3, 4, 5],
            vec![5u32, 1, 2, 2],
        ];
        let report = normalized_self_bleu(&corpus, &corpus, 4).unwrap();
        assert!((report.normalized - 1.0).abs() < 1e-12);
        assert!(!report.exceeds_unity());
        assert_eq!(report.per_sentence_bleu.len(), 3);
        let mean = report.per_sentence_bleu.iter().sum::<f64>() / 3.0;
        assert!((report.self_bleu - mean).abs() < 1e-12);
    }

    #[test]
    fn degenerate_generations_flagged_above_unity() {
        let generated = vec![vec![1u32, 2, 3, 4]; 5];
        let ground_truth = vec![
            vec![1u32, 2, 3, 4],
            vec![4u32, 3, 2, 1],
            vec![9u32, 8, 7, 6],
            vec![5u32, 5, 6, 6],
        ];
        let report = normalized_self_bleu(&generated, &ground_truth, 4).unwrap();
        assert!(report.normalized > 1.0);
        assert!(report.exceeds_unity());
    }

    #[test]
    fn maximally_diverse_generations_near_zero() {
        let generated = vec![
            vec![100u32, 101, 102, 103],
            vec![200u32, 201, 202, 203],
            vec![300u32, 301, 302, 303],
        ];
        let ground_truth = vec![vec![1u32, 2, 3, 4], vec![1u32, 2, 3, 5]];
        let report = normalized_self_bleu(&generated, &ground_truth, 4).unwrap();
        assert!(report.normalized < 1e-6);
    }
}
