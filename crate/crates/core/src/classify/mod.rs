//! Real-time fixation/saccade classification.
//!
//! Two streaming classifiers: dispersion-threshold ([`IdtClassifier`]) and
//! Kalman-chi-square ([`IkfClassifier`]). Both are causal; IDT defers labels
//! until its open window closes (bounded by the window length), IKF labels
//! every sample as it arrives.

mod idt;
mod ikf;

pub use idt::{idt_classify, IdtClassifier, IdtParams};
pub use ikf::{ikf_classify, IkfClassifier, IkfParams};

use alloc::vec::Vec;

use crate::signal::GazeSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum MovementLabel {
    Fixation,
    Saccade,
    /// Classifier has not seen enough history to decide.
    Unknown,
}

/// A maximal run of fixation-labeled samples.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FixationSegment {
    /// Inclusive sample indices into the classified stream.
    pub start_index: usize,
    pub end_index: usize,
    pub centroid_x: f64,
    pub centroid_y: f64,
    /// (end_index − start_index + 1) × 1000/fs.
    pub duration_ms: f64,
    /// Timestamp of the first member sample.
    pub onset_ms: f64,
}

/// Labels plus the fixation segments assembled from them.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub labels: Vec<MovementLabel>,
    pub fixations: Vec<FixationSegment>,
}

/// Instantaneous per-channel velocity in °/s: v_i = (p_i − p_{i−1})·fs,
/// v_0 = 0. A velocity touching a missing sample is NaN; forward-filled
/// streams never produce one.
pub fn velocity(samples: &[GazeSample], fs: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(samples.len());
    for (i, s) in samples.iter().enumerate() {
        let v = if i == 0 {
            match s.pos {
                Some(_) => (0.0, 0.0),
                None => (f64::NAN, f64::NAN),
            }
        } else {
            match (samples[i - 1].pos, s.pos) {
                (Some(prev), Some(cur)) => ((cur.0 - prev.0) * fs, (cur.1 - prev.1) * fs),
                _ => (f64::NAN, f64::NAN),
            }
        };
        out.push(v);
    }
    out
}

/// Builds fixation segments from maximal FIXATION runs. Centroids average
/// the valid member samples; runs with no valid member are dropped.
pub(crate) fn segments_from_labels(
    samples: &[GazeSample],
    labels: &[MovementLabel],
    fs: f64,
) -> Vec<FixationSegment> {
    let mut segments = Vec::new();
    let mut run_start: Option<usize> = None;
    for i in 0..=labels.len() {
        let in_fixation = i < labels.len() && labels[i] == MovementLabel::Fixation;
        match (run_start, in_fixation) {
            (None, true) => run_start = Some(i),
            (Some(start), false) => {
                if let Some(seg) = make_segment(samples, start, i - 1, fs) {
                    segments.push(seg);
                }
                run_start = None;
            }
            _ => {}
        }
    }
    segments
}

pub(crate) fn make_segment(
    samples: &[GazeSample],
    start: usize,
    end: usize,
    fs: f64,
) -> Option<FixationSegment> {
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for s in &samples[start..=end] {
        if let Some((x, y)) = s.pos {
            sx += x;
            sy += y;
            n += 1;
        }
    }
    if n == 0 {
        return None;
    }
    Some(FixationSegment {
        start_index: start,
        end_index: end,
        centroid_x: sx / n as f64,
        centroid_y: sy / n as f64,
        duration_ms: (end - start + 1) as f64 * 1000.0 / fs,
        onset_ms: samples[start].t_ms,
    })
}
