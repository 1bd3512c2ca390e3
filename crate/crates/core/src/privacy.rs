//! Re-identification pipeline: velocity windows, pluggable embedders,
//! cosine similarity, and Rank-1 Identification Rate.
//!
//! The embedder abstraction exists so a trained network can slot in behind
//! the same metric plumbing; the built-in [`VelocityStatsEmbedder`] is a
//! hand-crafted stand-in, good for exercising the pipeline and for
//! directional comparisons, not for absolute identification accuracy.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::classify::velocity;
use crate::math;
use crate::signal::Recording;
use crate::stats;

/// Non-overlapping window length in samples (5 s at 1 kHz).
pub const WINDOW_LEN: usize = 5000;
/// Velocity clamp in °/s.
pub const VELOCITY_CLAMP: f64 = 1000.0;
/// Sampling rate the windowing is defined for.
pub const REQUIRED_FS: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PrivacyError {
    #[error("velocity windowing is defined for 1000 Hz, got {fs} Hz")]
    RateMismatch { fs: f64 },
    #[error("corpus velocity channel has zero variance")]
    ZeroVariance,
    #[error("embedding dimension varies across windows")]
    DimensionMismatch,
    #[error("embedding with zero norm")]
    ZeroNorm,
    #[error("similarity matrix is empty")]
    EmptyMatrix,
    #[error("similarity and ground-truth shapes differ")]
    ShapeMismatch,
}

/// One 5000-sample velocity window. Values are NaN-free only after
/// normalization ([`corpus_zscore`]); raw windows keep NaN where the gaze
/// was missing.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VelocityWindow {
    pub subject_id: String,
    pub session_id: String,
    pub vx: Vec<f64>,
    pub vy: Vec<f64>,
}

/// Per-channel corpus statistics used for z-scoring.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ZscoreStats {
    pub mean_x: f64,
    pub std_x: f64,
    pub mean_y: f64,
    pub std_y: f64,
}

/// Instantaneous velocities clamped to ±1000 °/s, cut into non-overlapping
/// 5000-sample windows; the trailing remainder is dropped. Only 1 kHz
/// recordings are accepted — the window is sample-count-defined.
pub fn make_velocity_windows(rec: &Recording) -> Result<Vec<VelocityWindow>, PrivacyError> {
    if rec.fs != REQUIRED_FS {
        return Err(PrivacyError::RateMismatch { fs: rec.fs });
    }
    let clamp = |v: f64| v.clamp(-VELOCITY_CLAMP, VELOCITY_CLAMP);
    let v = velocity(&rec.samples, rec.fs);
    let mut windows = Vec::with_capacity(v.len() / WINDOW_LEN);
    for chunk in v.chunks_exact(WINDOW_LEN) {
        windows.push(VelocityWindow {
            subject_id: rec.subject_id.clone(),
            session_id: rec.session_id.clone(),
            vx: chunk.iter().map(|&(x, _)| clamp(x)).collect(),
            vy: chunk.iter().map(|&(_, y)| clamp(y)).collect(),
        });
    }
    Ok(windows)
}

fn channel_stats<'a>(values: impl Iterator<Item = &'a f64>) -> Result<(f64, f64), PrivacyError> {
    let (mut sum, mut sum_sq, mut n) = (0.0, 0.0, 0u64);
    for &v in values {
        if v.is_finite() {
            sum += v;
            sum_sq += v * v;
            n += 1;
        }
    }
    if n == 0 {
        return Err(PrivacyError::ZeroVariance);
    }
    let mean = sum / n as f64;
    let var = (sum_sq / n as f64 - mean * mean).max(0.0);
    let std = math::sqrt(var);
    if std == 0.0 {
        return Err(PrivacyError::ZeroVariance);
    }
    Ok((mean, std))
}

/// Fits per-channel mean/std over every finite value of every window
/// (population statistics).
pub fn fit_zscore(windows: &[VelocityWindow]) -> Result<ZscoreStats, PrivacyError> {
    let (mean_x, std_x) = channel_stats(windows.iter().flat_map(|w| w.vx.iter()))?;
    let (mean_y, std_y) = channel_stats(windows.iter().flat_map(|w| w.vy.iter()))?;
    Ok(ZscoreStats { mean_x, std_x, mean_y, std_y })
}

/// Maps every value to (v − μ)/σ, then replaces NaN with 0.
pub fn apply_zscore(windows: &[VelocityWindow], stats: &ZscoreStats) -> Vec<VelocityWindow> {
    let norm = |v: f64, mean: f64, std: f64| {
        let z = (v - mean) / std;
        if z.is_nan() {
            0.0
        } else {
            z
        }
    };
    windows
        .iter()
        .map(|w| VelocityWindow {
            subject_id: w.subject_id.clone(),
            session_id: w.session_id.clone(),
            vx: w.vx.iter().map(|&v| norm(v, stats.mean_x, stats.std_x)).collect(),
            vy: w.vy.iter().map(|&v| norm(v, stats.mean_y, stats.std_y)).collect(),
        })
        .collect()
}

/// One-shot corpus normalization: fit stats, apply them, return both.
pub fn corpus_zscore(
    windows: &[VelocityWindow],
) -> Result<(Vec<VelocityWindow>, ZscoreStats), PrivacyError> {
    let stats = fit_zscore(windows)?;
    Ok((apply_zscore(windows, &stats), stats))
}

pub type Embedding = Vec<f64>;

/// Deterministic map from a normalized velocity window to a fixed-dimension
/// finite vector.
pub trait Embedder {
    fn dimension(&self) -> usize;
    fn name(&self) -> &'static str;
    fn embed(&self, window: &VelocityWindow) -> Embedding;
}

/// Embeds every window, enforcing a constant output dimension.
pub fn embed_all<E: Embedder + ?Sized>(
    embedder: &E,
    windows: &[VelocityWindow],
) -> Result<Vec<Embedding>, PrivacyError> {
    let dim = embedder.dimension();
    windows
        .iter()
        .map(|w| {
            let e = embedder.embed(w);
            if e.len() == dim {
                Ok(e)
            } else {
                Err(PrivacyError::DimensionMismatch)
            }
        })
        .collect()
}

/// 64-dimensional velocity-distribution features: 13 statistics for each of
/// vx, vy, and speed, plus a 25-bin normalized speed histogram. A stand-in
/// for a trained embedding network, not a re-implementation of one.
#[derive(Debug, Clone, Copy, Default)]
pub struct VelocityStatsEmbedder;

impl VelocityStatsEmbedder {
    const HIST_BINS: usize = 25;
    // Normalized speeds rarely exceed a few standard deviations.
    const HIST_MAX: f64 = 5.0;

    fn channel_features(values: &[f64], out: &mut Vec<f64>) {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let m2 = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = math::sqrt(m2);
        let (skew, kurt) = if std > 0.0 {
            let m3 = values.iter().map(|v| math::powi(v - mean, 3)).sum::<f64>() / n;
            let m4 = values.iter().map(|v| math::powi(v - mean, 4)).sum::<f64>() / n;
            (m3 / (std * std * std), m4 / (m2 * m2) - 3.0)
        } else {
            (0.0, 0.0)
        };
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean_abs = values.iter().map(|v| math::abs(*v)).sum::<f64>() / n;
        let rms = math::sqrt(values.iter().map(|v| v * v).sum::<f64>() / n);
        for p in [5.0, 25.0, 50.0, 75.0, 95.0] {
            out.push(stats::percentile(values, p).unwrap_or(0.0));
        }
        out.extend_from_slice(&[mean, std, min, max, mean_abs, rms, skew, kurt]);
    }
}

impl Embedder for VelocityStatsEmbedder {
    fn dimension(&self) -> usize {
        13 * 3 + Self::HIST_BINS
    }

    fn name(&self) -> &'static str {
        "velocity-stats"
    }

    fn embed(&self, window: &VelocityWindow) -> Embedding {
        let speed: Vec<f64> = window
            .vx
            .iter()
            .zip(&window.vy)
            .map(|(&x, &y)| math::hypot(x, y))
            .collect();
        let mut out = Vec::with_capacity(self.dimension());
        Self::channel_features(&window.vx, &mut out);
        Self::channel_features(&window.vy, &mut out);
        Self::channel_features(&speed, &mut out);

        let mut hist = [0.0f64; Self::HIST_BINS];
        let bin_width = Self::HIST_MAX / Self::HIST_BINS as f64;
        for &s in &speed {
            let idx = (math::floor(s / bin_width) as usize).min(Self::HIST_BINS - 1);
            hist[idx] += 1.0;
        }
        let total = speed.len() as f64;
        out.extend(hist.iter().map(|c| c / total));
        out
    }
}

/// Concatenates the outputs of several embedders into one vector.
pub struct EnsembleEmbedder {
    members: Vec<Box<dyn Embedder>>,
}

impl EnsembleEmbedder {
    pub fn new(members: Vec<Box<dyn Embedder>>) -> Self {
        Self { members }
    }
}

impl Embedder for EnsembleEmbedder {
    fn dimension(&self) -> usize {
        self.members.iter().map(|m| m.dimension()).sum()
    }

    fn name(&self) -> &'static str {
        "ensemble"
    }

    fn embed(&self, window: &VelocityWindow) -> Embedding {
        let mut out = Vec::with_capacity(self.dimension());
        for m in &self.members {
            out.extend(m.embed(window));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, PrivacyError> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(PrivacyError::ShapeMismatch);
        }
        Ok(Self { rows: nrows, cols: ncols, data: rows.into_iter().flatten().collect() })
    }

    /// Applies `f` to every score; test helper for argmax-invariance checks.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }
}

/// Y_ij = 1 iff enrollment row i and authentication column j belong to the
/// same subject.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<bool>,
}

impl GroundTruthMatrix {
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[i * self.cols + j]
    }

    pub fn from_subjects(enroll: &[String], auth: &[String]) -> Self {
        let mut data = Vec::with_capacity(enroll.len() * auth.len());
        for e in enroll {
            for a in auth {
                data.push(e == a);
            }
        }
        Self { rows: enroll.len(), cols: auth.len(), data }
    }

    pub fn from_rows(rows: Vec<Vec<bool>>) -> Result<Self, PrivacyError> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(PrivacyError::ShapeMismatch);
        }
        Ok(Self { rows: nrows, cols: ncols, data: rows.into_iter().flatten().collect() })
    }
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, PrivacyError> {
    if a.len() != b.len() {
        return Err(PrivacyError::DimensionMismatch);
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(PrivacyError::ZeroNorm);
    }
    Ok(dot / (math::sqrt(na) * math::sqrt(nb)))
}

/// S_ij = cosine(enroll_i, auth_j).
pub fn similarity_matrix(
    enroll: &[Embedding],
    auth: &[Embedding],
) -> Result<SimilarityMatrix, PrivacyError> {
    let mut data = Vec::with_capacity(enroll.len() * auth.len());
    for e in enroll {
        for a in auth {
            data.push(cosine_similarity(e, a)?);
        }
    }
    Ok(SimilarityMatrix { rows: enroll.len(), cols: auth.len(), data })
}

/// Rank-1 Identification Rate in percent: for each authentication column,
/// the top-scoring enrollment row (ties to the lowest index) must be a
/// ground-truth match. Columns with no possible match count as misses.
pub fn rank1_ir(s: &SimilarityMatrix, y: &GroundTruthMatrix) -> Result<f64, PrivacyError> {
    if s.rows == 0 || s.cols == 0 {
        return Err(PrivacyError::EmptyMatrix);
    }
    if s.rows != y.rows || s.cols != y.cols {
        return Err(PrivacyError::ShapeMismatch);
    }
    let mut correct = 0usize;
    for j in 0..s.cols {
        let mut best = 0usize;
        for i in 1..s.rows {
            if s.get(i, j) > s.get(best, j) {
                best = i;
            }
        }
        if y.get(best, j) {
            correct += 1;
        }
    }
    Ok(100.0 * correct as f64 / s.cols as f64)
}
