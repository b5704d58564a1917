//! Dynamic time warping over feature matrices.

use crate::dsp::FeatureMatrix;

use super::MetricsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalDistance {
    /// Euclidean distance between frames.
    Euclidean,
    /// Squared Euclidean distance between frames.
    Squared,
}

impl LocalDistance {
    fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        let sq: f64 = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| {
                let d = x - y;
                d * d
            })
            .sum();
        match self {
            LocalDistance::Euclidean => sq.sqrt(),
            LocalDistance::Squared => sq,
        }
    }
}

/// A monotone alignment from `(0, 0)` to `(T1-1, T2-1)` with steps in
/// `{(1,0), (0,1), (1,1)}` and the summed local distance along it.
#[derive(Debug, Clone, PartialEq)]
pub struct DtwAlignment {
    pub path: Vec<(usize, usize)>,
    pub cost: f64,
}

/// Globally minimal-cost alignment via the classic dynamic program.
/// Backtrace ties prefer the diagonal step, then advancing in `a`, then
/// advancing in `b`.
pub fn dtw(
    a: &FeatureMatrix,
    b: &FeatureMatrix,
    dist: LocalDistance,
) -> Result<DtwAlignment, MetricsError> {
    dtw_on_columns(a, b, 0..a.dim(), dist)
}

/// DTW restricted to a column range of both matrices; `dtw` is the full
/// range, MCD uses `1..D` to exclude the energy coefficient.
pub(super) fn dtw_on_columns(
    a: &FeatureMatrix,
    b: &FeatureMatrix,
    cols: std::ops::Range<usize>,
    dist: LocalDistance,
) -> Result<DtwAlignment, MetricsError> {
    if a.dim() != b.dim() {
        return Err(MetricsError::DimensionMismatch(format!(
            "{} vs {} feature dimensions",
            a.dim(),
            b.dim()
        )));
    }
    if a.is_empty() || b.is_empty() {
        return Err(MetricsError::EmptyInput("empty feature matrix".into()));
    }
    let (t1, t2) = (a.num_frames(), b.num_frames());
    let local = |i: usize, j: usize| dist.eval(&a.row(i)[cols.clone()], &b.row(j)[cols.clone()]);

    let mut acc = vec![f64::INFINITY; t1 * t2];
    let at = |i: usize, j: usize| i * t2 + j;
    acc[0] = local(0, 0);
    for j in 1..t2 {
        acc[at(0, j)] = acc[at(0, j - 1)] + local(0, j);
    }
    for i in 1..t1 {
        acc[at(i, 0)] = acc[at(i - 1, 0)] + local(i, 0);
        for j in 1..t2 {
            let best = acc[at(i - 1, j - 1)]
                .min(acc[at(i - 1, j)])
                .min(acc[at(i, j - 1)]);
            acc[at(i, j)] = best + local(i, j);
        }
    }

    let mut path = Vec::with_capacity(t1.max(t2));
    let (mut i, mut j) = (t1 - 1, t2 - 1);
    path.push((i, j));
    while i > 0 || j > 0 {
        if i == 0 {
            j -= 1;
        } else if j == 0 {
            i -= 1;
        } else {
            let diag = acc[at(i - 1, j - 1)];
            let up = acc[at(i - 1, j)];
            let left = acc[at(i, j - 1)];
            if diag <= up && diag <= left {
                i -= 1;
                j -= 1;
            } else if up <= left {
                i -= 1;
            } else {
                j -= 1;
            }
        }
        path.push((i, j));
    }
    path.reverse();

    Ok(DtwAlignment {
        path,
        cost: acc[at(t1 - 1, t2 - 1)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::FeatureKind;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn matrix(rows: &[Vec<f64>]) -> FeatureMatrix {
        FeatureMatrix::from_rows(rows, 50.0, FeatureKind::External, 0)
    }

    /// Minimal cost over all monotone paths, by brute-force recursion.
    fn exhaustive_cost(a: &FeatureMatrix, b: &FeatureMatrix, dist: LocalDistance) -> f64 {
        fn go(
            a: &FeatureMatrix,
            b: &FeatureMatrix,
            i: usize,
            j: usize,
            dist: LocalDistance,
        ) -> f64 {
            let local = dist.eval(a.row(i), b.row(j));
            if i == 0 && j == 0 {
                return local;
            }
            let mut best = f64::INFINITY;
            if i > 0 && j > 0 {
                best = best.min(go(a, b, i - 1, j - 1, dist));
            }
            if i > 0 {
                best = best.min(go(a, b, i - 1, j, dist));
            }
            if j > 0 {
                best = best.min(go(a, b, i, j - 1, dist));
            }
            local + best
        }
        go(a, b, a.num_frames() - 1, b.num_frames() - 1, dist)
    }

    fn random_matrix(rng: &mut ChaCha8Rng, t: usize, d: usize) -> FeatureMatrix {
        // Integer-valued entries keep float sums exact for oracle equality.
        let rows: Vec<Vec<f64>> = (0..t)
            .map(|_| (0..d).map(|_| rng.random_range(-4..5) as f64).collect())
            .collect();
        matrix(&rows)
    }

    #[test]
    fn identical_inputs_align_on_diagonal() {
        let a = matrix(&[vec![1.0, 0.0], vec![2.0, 1.0], vec![0.0, 3.0]]);
        let al = dtw(&a, &a, LocalDistance::Euclidean).unwrap();
        assert_eq!(al.cost, 0.0);
        assert_eq!(al.path, vec![(0, 0), (1, 1), (2, 2)]);
    }

    #[test]
    fn repetition_absorbed_at_zero_cost() {
        let a = matrix(&[vec![1.5, -2.0]]);
        let b = matrix(&[vec![1.5, -2.0], vec![1.5, -2.0], vec![1.5, -2.0]]);
        let al = dtw(&a, &b, LocalDistance::Euclidean).unwrap();
        assert_eq!(al.cost, 0.0);
        assert_eq!(al.path, vec![(0, 0), (0, 1), (0, 2)]);
    }

    #[test]
    fn matches_exhaustive_path_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for case in 0..100 {
            let t1 = rng.random_range(1..=6);
            let t2 = rng.random_range(1..=6);
            let d = rng.random_range(1..=3);
            let dist = if case % 2 == 0 {
                LocalDistance::Squared
            } else {
                LocalDistance::Euclidean
            };
            let a = random_matrix(&mut rng, t1, d);
            let b = random_matrix(&mut rng, t2, d);
            let got = dtw(&a, &b, dist).unwrap();
            let expected = exhaustive_cost(&a, &b, dist);
            match dist {
                // Squared distances on integer grids are exact.
                LocalDistance::Squared => assert_eq!(got.cost, expected, "case {case}"),
                LocalDistance::Euclidean => {
                    assert!((got.cost - expected).abs() < 1e-9, "case {case}")
                }
            }
        }
    }

    #[test]
    fn path_is_monotone_and_complete() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..25 {
            let (t1, t2) = (rng.random_range(1..10), rng.random_range(1..10));
            let a = random_matrix(&mut rng, t1, 2);
            let b = random_matrix(&mut rng, t2, 2);
            let al = dtw(&a, &b, LocalDistance::Euclidean).unwrap();
            assert_eq!(al.path.first(), Some(&(0, 0)));
            assert_eq!(
                al.path.last(),
                Some(&(a.num_frames() - 1, b.num_frames() - 1))
            );
            for w in al.path.windows(2) {
                let (di, dj) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
                assert!(matches!((di, dj), (0, 1) | (1, 0) | (1, 1)));
            }
            // Cost equals the local distances accumulated along the path.
            let sum: f64 = al
                .path
                .iter()
                .map(|&(i, j)| LocalDistance::Euclidean.eval(a.row(i), b.row(j)))
                .sum();
            assert!((sum - al.cost).abs() < 1e-9);
        }
    }

    #[test]
    fn symmetric_cost_for_symmetric_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let (t1, t2) = (rng.random_range(1..8), rng.random_range(1..8));
            let a = random_matrix(&mut rng, t1, 3);
            let b = random_matrix(&mut rng, t2, 3);
            let ab = dtw(&a, &b, LocalDistance::Euclidean).unwrap();
            let ba = dtw(&b, &a, LocalDistance::Euclidean).unwrap();
            assert!((ab.cost - ba.cost).abs() < 1e-9);
        }
    }

    #[test]
    fn error_cases() {
        let a = matrix(&[vec![0.0, 1.0]]);
        let b = matrix(&[vec![0.0, 1.0, 2.0]]);
        assert!(matches!(
            dtw(&a, &b, LocalDistance::Euclidean),
            Err(MetricsError::DimensionMismatch(_))
        ));
        let empty = FeatureMatrix::from_flat(Vec::new(), 2, 50.0, FeatureKind::External, 0);
        assert!(matches!(
            dtw(&a, &empty, LocalDistance::Euclidean),
            Err(MetricsError::EmptyInput(_))
        ));
    }
}
