//! Mel-cepstral distortion and DTW-paired F0 RMSE.

use crate::dsp::{FeatureMatrix, PitchTrack};

use super::dtw::{dtw, dtw_on_columns, LocalDistance};
use super::MetricsError;

/// 10 / ln 10, the dB conversion factor in the MCD formula.
const MCD_DB: f64 = 10.0 / std::f64::consts::LN_10;

/// Mel-cepstral distortion in dB between two cepstral sequences.
///
/// Frames are paired by DTW over coefficients `1..D` (the energy
/// coefficient is excluded throughout), then averaged:
/// `(10 / ln 10) * sqrt(2 * sum_d (c1_d - c2_d)^2)` per pair.
pub fn mcd(c1: &FeatureMatrix, c2: &FeatureMatrix) -> Result<f64, MetricsError> {
    if c1.dim() != c2.dim() {
        return Err(MetricsError::DimensionMismatch(format!(
            "{} vs {} cepstral coefficients",
            c1.dim(),
            c2.dim()
        )));
    }
    if c1.dim() < 2 {
        return Err(MetricsError::DimensionMismatch(
            "need at least two cepstral coefficients (coefficient 0 is excluded)".into(),
        ));
    }
    let alignment = dtw_on_columns(c1, c2, 1..c1.dim(), LocalDistance::Euclidean)?;
    let total: f64 = alignment
        .path
        .iter()
        .map(|&(i, j)| {
            let sq: f64 = c1.row(i)[1..]
                .iter()
                .zip(&c2.row(j)[1..])
                .map(|(&a, &b)| {
                    let d = a - b;
                    d * d
                })
                .sum();
            MCD_DB * (2.0 * sq).sqrt()
        })
        .sum();
    Ok(total / alignment.path.len() as f64)
}

/// Root-mean-square F0 error in Hz over DTW-aligned frame pairs where
/// both sides are voiced. The pairing comes from DTW on the mel-cepstra;
/// pitch tracks must be frame-aligned with their cepstra.
pub fn f0_rmse(
    f1: &PitchTrack,
    c1: &FeatureMatrix,
    f2: &PitchTrack,
    c2: &FeatureMatrix,
) -> Result<f64, MetricsError> {
    if f1.len() != c1.num_frames() || f2.len() != c2.num_frames() {
        return Err(MetricsError::FrameCountMismatch(format!(
            "pitch {}x{} vs cepstra {}x{} frames",
            f1.len(),
            f2.len(),
            c1.num_frames(),
            c2.num_frames()
        )));
    }
    let alignment = dtw(c1, c2, LocalDistance::Euclidean)?;
    let mut sum_sq = 0.0;
    let mut pairs = 0usize;
    for &(i, j) in &alignment.path {
        if f1.voiced[i] && f2.voiced[j] {
            let d = f1.f0[i] - f2.f0[j];
            sum_sq += d * d;
            pairs += 1;
        }
    }
    if pairs == 0 {
        return Err(MetricsError::NoVoicedOverlap);
    }
    Ok((sum_sq / pairs as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::FeatureKind;

    fn cepstra(rows: &[Vec<f64>]) -> FeatureMatrix {
        FeatureMatrix::from_rows(rows, 50.0, FeatureKind::MelCepstra, 320)
    }

    fn track(f0: Vec<f64>) -> PitchTrack {
        let voiced = f0.iter().map(|&f| f > 0.0).collect();
        PitchTrack {
            f0,
            voiced,
            frame_rate: 50.0,
            tracker: "test",
        }
    }

    #[test]
    fn identical_cepstra_have_zero_mcd() {
        let c = cepstra(&[vec![3.0, 1.0, -2.0], vec![1.0, 0.5, 0.0]]);
        assert_eq!(mcd(&c, &c).unwrap(), 0.0);
    }

    #[test]
    fn single_frame_unit_difference_closed_form() {
        // Energy coefficients differ wildly but must not contribute;
        // coefficients 1.. are (1,0,0) vs (0,1,0), squared sum 2.
        let a = cepstra(&[vec![9.0, 1.0, 0.0, 0.0]]);
        let b = cepstra(&[vec![-4.0, 0.0, 1.0, 0.0]]);
        let expected = (10.0 / std::f64::consts::LN_10) * (2.0f64 * 2.0).sqrt();
        assert!((mcd(&a, &b).unwrap() - expected).abs() < 1e-9);

        // A pair with unit squared distance hits (10/ln10) * sqrt(2).
        let a = cepstra(&[vec![0.0, 1.0]]);
        let b = cepstra(&[vec![5.0, 0.0]]);
        let expected = (10.0 / std::f64::consts::LN_10) * 2f64.sqrt();
        assert!((mcd(&a, &b).unwrap() - expected).abs() < 1e-9);
        assert!((expected - 6.141851).abs() < 1e-5);
    }

    #[test]
    fn aligned_random_pairs_match_hand_pipeline() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let rows_a: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..4).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let rows_b: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..4).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let a = cepstra(&rows_a);
        let b = cepstra(&rows_b);

        // Oracle: independent DTW on coefficients 1.. and the per-pair formula.
        let stripped_a = a.select_columns(1..4);
        let stripped_b = b.select_columns(1..4);
        let alignment = dtw(&stripped_a, &stripped_b, LocalDistance::Euclidean).unwrap();
        let expected: f64 = alignment
            .path
            .iter()
            .map(|&(i, j)| {
                let sq: f64 = rows_a[i][1..]
                    .iter()
                    .zip(&rows_b[j][1..])
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum();
                (10.0 / std::f64::consts::LN_10) * (2.0 * sq).sqrt()
            })
            .sum::<f64>()
            / alignment.path.len() as f64;

        assert!((mcd(&a, &b).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn f0_identical_utterances_zero() {
        let c = cepstra(&[vec![1.0, 2.0], vec![0.0, 1.0], vec![3.0, 0.0]]);
        let f = track(vec![200.0, 210.0, 0.0]);
        assert_eq!(f0_rmse(&f, &c, &f, &c).unwrap(), 0.0);
    }

    #[test]
    fn f0_constant_offset() {
        let c = cepstra(&[vec![1.0, 2.0], vec![0.0, 1.0], vec![3.0, 0.0]]);
        let f1 = track(vec![200.0, 210.0, 190.0]);
        let f2 = track(vec![210.0, 220.0, 200.0]);
        assert!((f0_rmse(&f1, &c, &f2, &c).unwrap() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn f0_hand_rmse() {
        // Identical cepstra give the diagonal pairing; diffs 3, 4, 0.
        let c = cepstra(&[vec![1.0, 0.0], vec![2.0, 1.0], vec![0.0, 2.0]]);
        let f1 = track(vec![100.0, 150.0, 200.0]);
        let f2 = track(vec![103.0, 154.0, 200.0]);
        let expected = (25.0f64 / 3.0).sqrt();
        assert!((f0_rmse(&f1, &c, &f2, &c).unwrap() - expected).abs() < 1e-9);
        assert!((expected - 2.886751).abs() < 1e-5);
    }

    #[test]
    fn f0_unvoiced_frames_excluded() {
        let c = cepstra(&[vec![1.0, 0.0], vec![2.0, 1.0], vec![0.0, 2.0]]);
        let f1 = track(vec![100.0, 0.0, 200.0]);
        let f2 = track(vec![104.0, 150.0, 200.0]);
        // Only frames 0 and 2 pair voiced-voiced: diffs 4 and 0.
        let expected = (16.0f64 / 2.0).sqrt();
        assert!((f0_rmse(&f1, &c, &f2, &c).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn f0_no_voiced_overlap_reported() {
        let c = cepstra(&[vec![1.0, 0.0], vec![2.0, 1.0]]);
        let f1 = track(vec![100.0, 0.0]);
        let f2 = track(vec![0.0, 150.0]);
        // DTW pairs the diagonal; neither pair is voiced on both sides.
        assert!(matches!(
            f0_rmse(&f1, &c, &f2, &c),
            Err(MetricsError::NoVoicedOverlap)
        ));
    }

    #[test]
    fn f0_frame_count_mismatch() {
        let c = cepstra(&[vec![1.0, 0.0], vec![2.0, 1.0]]);
        let f = track(vec![100.0]);
        assert!(matches!(
            f0_rmse(&f, &c, &f, &c),
            Err(MetricsError::FrameCountMismatch(_))
        ));
    }

    #[test]
    fn mcd_dimension_checks() {
        let a = cepstra(&[vec![1.0, 0.0]]);
        let b = cepstra(&[vec![1.0, 0.0, 2.0]]);
        assert!(matches!(
            mcd(&a, &b),
            Err(MetricsError::DimensionMismatch(_))
        ));
        let scalar = cepstra(&[vec![1.0]]);
        assert!(matches!(
            mcd(&scalar, &scalar),
            Err(MetricsError::DimensionMismatch(_))
        ));
    }
}
