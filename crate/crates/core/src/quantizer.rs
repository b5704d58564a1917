//! Mini-batch k-means codebook training and nearest-centroid assignment.
//!
//! Training is k-means++ seeded from a reservoir sample, then per-batch
//! nearest-centroid assignment with running-mean centroid updates. When
//! the batch covers the whole dataset the update degenerates to exact
//! Lloyd iterations, so full-batch inertia is non-increasing. All
//! randomness flows from one seeded generator; identical inputs and seed
//! give a bit-identical codebook.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dsp::{FeatureKind, FeatureMatrix};

const MAGIC: &[u8; 4] = b"PPTC";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum QuantizerError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("malformed codebook file: {0}")]
    MalformedFile(String),
    #[error("unsupported codebook version {0}")]
    VersionMismatch(u32),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A learned K×D centroid inventory. Centroids are stored as f32, the
/// on-disk precision, so a save/load round trip is bit-identical.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    centroids: Vec<f32>,
    k: usize,
    d: usize,
    pub feature_kind: FeatureKind,
    pub seed: u64,
    pub trained_iterations: u32,
}

impl Codebook {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn centroid(&self, j: usize) -> &[f32] {
        &self.centroids[j * self.d..(j + 1) * self.d]
    }

    /// Index of the nearest centroid by squared Euclidean distance and
    /// that distance. Ties resolve to the lowest index.
    pub fn nearest(&self, point: &[f64]) -> (u32, f64) {
        debug_assert_eq!(point.len(), self.d);
        let mut best = 0u32;
        let mut best_dist = f64::INFINITY;
        for j in 0..self.k {
            let dist = sq_dist_f32(point, self.centroid(j));
            if dist < best_dist {
                best = j as u32;
                best_dist = dist;
            }
        }
        (best, best_dist)
    }
}

fn sq_dist_f32(point: &[f64], centroid: &[f32]) -> f64 {
    point
        .iter()
        .zip(centroid)
        .map(|(&a, &b)| {
            let d = a - b as f64;
            d * d
        })
        .sum()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

#[derive(Debug, Clone)]
pub struct KMeansConfig {
    pub k: usize,
    pub batch_size: usize,
    pub max_iters: usize,
    /// Stop when mean centroid displacement per iteration drops below this.
    pub tol: f64,
    pub seed: u64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 200,
            batch_size: 10_000,
            max_iters: 300,
            tol: 1e-4,
            seed: 0,
        }
    }
}

/// Convergence diagnostics from a fit.
#[derive(Debug, Clone)]
pub struct FitStats {
    pub iterations: u32,
    pub converged: bool,
    /// True when the batch covered the dataset (exact Lloyd updates).
    pub full_batch: bool,
    /// Mean centroid displacement per iteration.
    pub shift_history: Vec<f64>,
    /// Dataset inertia after each iteration; populated in full-batch mode only.
    pub inertia_history: Vec<f64>,
    /// Dead centroids relocated to far points.
    pub reinitialized: u32,
}

/// Fit a codebook on flat row-major `data` of `dim`-dimensional points.
pub fn fit_minibatch_kmeans(
    data: &[f64],
    dim: usize,
    cfg: &KMeansConfig,
    feature_kind: FeatureKind,
) -> Result<Codebook, QuantizerError> {
    fit_minibatch_kmeans_with_stats(data, dim, cfg, feature_kind).map(|(cb, _)| cb)
}

/// [`fit_minibatch_kmeans`] plus per-iteration diagnostics.
pub fn fit_minibatch_kmeans_with_stats(
    data: &[f64],
    dim: usize,
    cfg: &KMeansConfig,
    feature_kind: FeatureKind,
) -> Result<(Codebook, FitStats), QuantizerError> {
    if dim == 0 || !data.len().is_multiple_of(dim) {
        return Err(QuantizerError::DimensionMismatch(format!(
            "{} values do not form {dim}-dimensional points",
            data.len()
        )));
    }
    let n = data.len() / dim;
    if cfg.k == 0 {
        return Err(QuantizerError::InsufficientData("k must be >= 1".into()));
    }
    if n < cfg.k {
        return Err(QuantizerError::InsufficientData(format!(
            "{n} points for k = {}",
            cfg.k
        )));
    }
    if cfg.batch_size == 0 {
        return Err(QuantizerError::InsufficientData(
            "batch_size must be >= 1".into(),
        ));
    }

    let point = |i: usize| &data[i * dim..(i + 1) * dim];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // Seeded reservoir (Algorithm R) feeding k-means++.
    let reservoir_cap =
        n.min((3usize.saturating_mul(cfg.k)).max(3usize.saturating_mul(cfg.batch_size)));
    let mut reservoir: Vec<usize> = (0..reservoir_cap).collect();
    for i in reservoir_cap..n {
        let j = rng.random_range(0..=i);
        if j < reservoir_cap {
            reservoir[j] = i;
        }
    }

    let mut centroids = kmeanspp_init(data, dim, n, &reservoir, cfg.k, &mut rng)?;

    let full_batch = cfg.batch_size >= n;
    let mut counts = vec![0u64; cfg.k];
    let mut touched = vec![false; cfg.k];
    let mut stats = FitStats {
        iterations: 0,
        converged: false,
        full_batch,
        shift_history: Vec::new(),
        inertia_history: Vec::new(),
        reinitialized: 0,
    };

    let mut batch: Vec<usize> = Vec::with_capacity(cfg.batch_size.min(n));
    for _ in 0..cfg.max_iters {
        stats.iterations += 1;
        batch.clear();
        if full_batch {
            batch.extend(0..n);
        } else {
            for _ in 0..cfg.batch_size {
                batch.push(rng.random_range(0..n));
            }
        }

        let assignments: Vec<usize> = batch
            .iter()
            .map(|&i| nearest_centroid(point(i), &centroids, dim).0)
            .collect();

        let previous = centroids.clone();
        if full_batch {
            let relocated = lloyd_update(
                data,
                dim,
                cfg.k,
                &batch,
                &assignments,
                &mut centroids,
                &mut counts,
            );
            stats.reinitialized += relocated;
            touched.iter_mut().for_each(|t| *t = true);
        } else {
            for (&i, &c) in batch.iter().zip(&assignments) {
                counts[c] += 1;
                touched[c] = true;
                let eta = 1.0 / counts[c] as f64;
                let centroid = &mut centroids[c * dim..(c + 1) * dim];
                for (cv, &xv) in centroid.iter_mut().zip(point(i)) {
                    *cv += eta * (xv - *cv);
                }
            }
        }

        let shift = mean_shift(&previous, &centroids, dim, cfg.k);
        stats.shift_history.push(shift);
        if full_batch {
            stats
                .inertia_history
                .push(inertia_f64(data, dim, &centroids));
        }
        if shift < cfg.tol {
            stats.converged = true;
            break;
        }
    }

    // No centroid may finish the fit untouched; relocate stragglers to the
    // worst-represented points.
    let dead: Vec<usize> = (0..cfg.k).filter(|&j| !touched[j]).collect();
    if !dead.is_empty() {
        stats.reinitialized += dead.len() as u32;
        relocate_to_farthest(data, dim, n, &dead, &mut centroids);
    }

    let cb = Codebook {
        centroids: centroids.iter().map(|&v| v as f32).collect(),
        k: cfg.k,
        d: dim,
        feature_kind,
        seed: cfg.seed,
        trained_iterations: stats.iterations,
    };
    Ok((cb, stats))
}

fn nearest_centroid(point: &[f64], centroids: &[f64], dim: usize) -> (usize, f64) {
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (j, centroid) in centroids.chunks_exact(dim).enumerate() {
        let dist = sq_dist(point, centroid);
        if dist < best_dist {
            best = j;
            best_dist = dist;
        }
    }
    (best, best_dist)
}

fn kmeanspp_init(
    data: &[f64],
    dim: usize,
    n: usize,
    reservoir: &[usize],
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>, QuantizerError> {
    let point = |i: usize| &data[i * dim..(i + 1) * dim];
    let mut centroids = Vec::with_capacity(k * dim);

    let first = reservoir[rng.random_range(0..reservoir.len())];
    centroids.extend_from_slice(point(first));

    // Squared distance from each reservoir point to its nearest chosen centroid.
    let mut dist2: Vec<f64> = reservoir
        .iter()
        .map(|&i| sq_dist(point(i), &centroids[0..dim]))
        .collect();

    while centroids.len() < k * dim {
        let total: f64 = dist2.iter().sum();
        let chosen = if total > 0.0 {
            // Walk only positive-weight entries so a duplicate of an
            // already-chosen centroid can never be drawn.
            let mut u = rng.random::<f64>() * total;
            let mut picked = None;
            for (idx, &d2) in dist2.iter().enumerate() {
                if d2 <= 0.0 {
                    continue;
                }
                u -= d2;
                if u <= 0.0 {
                    picked = Some(idx);
                    break;
                }
            }
            let picked =
                picked.unwrap_or_else(|| dist2.iter().rposition(|&d| d > 0.0).unwrap());
            reservoir[picked]
        } else {
            // Reservoir exhausted its distinct points; scan the full
            // dataset for one not yet chosen.
            match (0..n).find(|&i| {
                centroids
                    .chunks_exact(dim)
                    .all(|c| sq_dist(point(i), c) > 0.0)
            }) {
                Some(i) => i,
                None => {
                    return Err(QuantizerError::InsufficientData(format!(
                        "fewer than {k} distinct points"
                    )))
                }
            }
        };
        centroids.extend_from_slice(point(chosen));
        let newest = &centroids[centroids.len() - dim..];
        for (slot, &i) in dist2.iter_mut().zip(reservoir) {
            let d2 = sq_dist(point(i), newest);
            if d2 < *slot {
                *slot = d2;
            }
        }
    }
    Ok(centroids)
}

/// Exact Lloyd update over a full batch; returns how many empty clusters
/// were relocated to far points.
fn lloyd_update(
    data: &[f64],
    dim: usize,
    k: usize,
    batch: &[usize],
    assignments: &[usize],
    centroids: &mut [f64],
    counts: &mut [u64],
) -> u32 {
    let point = |i: usize| &data[i * dim..(i + 1) * dim];
    let mut sums = vec![0.0f64; k * dim];
    let mut members = vec![0u64; k];
    for (&i, &c) in batch.iter().zip(assignments) {
        members[c] += 1;
        for (s, &x) in sums[c * dim..(c + 1) * dim].iter_mut().zip(point(i)) {
            *s += x;
        }
    }

    let empty: Vec<usize> = (0..k).filter(|&j| members[j] == 0).collect();
    for (j, &m) in members.iter().enumerate() {
        if m > 0 {
            for (c, s) in centroids[j * dim..(j + 1) * dim]
                .iter_mut()
                .zip(&sums[j * dim..(j + 1) * dim])
            {
                *c = s / m as f64;
            }
        }
        counts[j] += m;
    }
    if !empty.is_empty() {
        relocate_to_farthest(data, dim, data.len() / dim, &empty, centroids);
        for &j in &empty {
            counts[j] += 1;
        }
    }
    empty.len() as u32
}

/// Move each listed centroid onto the point currently farthest from its
/// nearest centroid, one point per relocation.
fn relocate_to_farthest(
    data: &[f64],
    dim: usize,
    n: usize,
    targets: &[usize],
    centroids: &mut [f64],
) {
    let point = |i: usize| &data[i * dim..(i + 1) * dim];
    let mut used = vec![false; n];
    for &j in targets {
        let mut far_idx = 0;
        let mut far_dist = -1.0;
        for (i, taken) in used.iter().enumerate() {
            if *taken {
                continue;
            }
            let (_, dist) = nearest_centroid(point(i), centroids, dim);
            if dist > far_dist {
                far_dist = dist;
                far_idx = i;
            }
        }
        used[far_idx] = true;
        centroids[j * dim..(j + 1) * dim].copy_from_slice(point(far_idx));
    }
}

fn mean_shift(old: &[f64], new: &[f64], dim: usize, k: usize) -> f64 {
    old.chunks_exact(dim)
        .zip(new.chunks_exact(dim))
        .map(|(a, b)| sq_dist(a, b).sqrt())
        .sum::<f64>()
        / k as f64
}

fn inertia_f64(data: &[f64], dim: usize, centroids: &[f64]) -> f64 {
    data.chunks_exact(dim)
        .map(|p| nearest_centroid(p, centroids, dim).1)
        .sum()
}

/// Per-frame nearest-centroid indices for a feature matrix.
pub fn assign(cb: &Codebook, features: &FeatureMatrix) -> Result<Vec<u32>, QuantizerError> {
    if features.dim() != cb.d {
        return Err(QuantizerError::DimensionMismatch(format!(
            "features are {}-dimensional, codebook is {}",
            features.dim(),
            cb.d
        )));
    }
    Ok(features.rows_iter().map(|row| cb.nearest(row).0).collect())
}

/// Sum of squared distances from each point to its nearest centroid.
pub fn inertia(cb: &Codebook, data: &[f64]) -> Result<f64, QuantizerError> {
    if !data.len().is_multiple_of(cb.d) {
        return Err(QuantizerError::DimensionMismatch(format!(
            "{} values do not form {}-dimensional points",
            data.len(),
            cb.d
        )));
    }
    Ok(data.chunks_exact(cb.d).map(|p| cb.nearest(p).1).sum())
}

/// Codebook file: magic `PPTC`, u32 version, u32 K, u32 D, u64 seed,
/// u32 iterations, u8 feature_kind, K*D little-endian f32 centroids.
pub fn save_codebook(cb: &Codebook, path: impl AsRef<Path>) -> Result<(), QuantizerError> {
    let mut out = Vec::with_capacity(29 + cb.centroids.len() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(cb.k as u32).to_le_bytes());
    out.extend_from_slice(&(cb.d as u32).to_le_bytes());
    out.extend_from_slice(&cb.seed.to_le_bytes());
    out.extend_from_slice(&cb.trained_iterations.to_le_bytes());
    out.push(cb.feature_kind.as_u8());
    for &v in &cb.centroids {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let mut file = fs::File::create(path)?;
    file.write_all(&out)?;
    Ok(())
}

pub fn load_codebook(path: impl AsRef<Path>) -> Result<Codebook, QuantizerError> {
    let bytes = fs::read(path)?;
    if bytes.len() < 29 {
        return Err(QuantizerError::MalformedFile("file too short".into()));
    }
    if &bytes[0..4] != MAGIC {
        return Err(QuantizerError::MalformedFile("bad magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(QuantizerError::VersionMismatch(version));
    }
    let k = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let seed = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let iterations = u32::from_le_bytes(bytes[24..28].try_into().unwrap());
    let feature_kind = FeatureKind::from_u8(bytes[28])
        .ok_or_else(|| QuantizerError::MalformedFile(format!("bad kind {}", bytes[28])))?;
    if k == 0 || d == 0 {
        return Err(QuantizerError::MalformedFile("zero k or d".into()));
    }

    let payload = &bytes[29..];
    let expected = k
        .checked_mul(d)
        .and_then(|v| v.checked_mul(4))
        .ok_or_else(|| QuantizerError::MalformedFile("size overflow".into()))?;
    if payload.len() != expected {
        return Err(QuantizerError::MalformedFile(format!(
            "payload {} bytes, expected {expected}",
            payload.len()
        )));
    }
    let mut centroids = Vec::with_capacity(k * d);
    for chunk in payload.chunks_exact(4) {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(QuantizerError::MalformedFile(
                "non-finite centroid entry".into(),
            ));
        }
        centroids.push(v);
    }
    Ok(Codebook {
        centroids,
        k,
        d,
        feature_kind,
        seed,
        trained_iterations: iterations,
    })
}
