//! Simulated gaze-based target selection over random-saccade task
//! recordings: per-target windows, Rank-1 Fixation triggers, angular error,
//! and population accuracy summaries.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::classify::{make_segment, FixationSegment};
use crate::math;
use crate::signal::{Recording, TargetEvent};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InteractionError {
    #[error("recording has no target track")]
    NoTargets,
    #[error("gaze direction vector is degenerate")]
    DegenerateVector,
    #[error("no user has a valid interaction")]
    EmptyPopulation,
}

/// Samples eligible for one target: `start_index..end_index` covers
/// onset ≤ t < onset + 1 s, truncated at the next onset or stream end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetWindow {
    pub target: TargetEvent,
    pub start_index: usize,
    pub end_index: usize,
}

/// Result of attempting one target selection.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InteractionOutcome {
    pub target_id: u32,
    pub valid: bool,
    /// Rank-1 Fixation centroid, present iff valid.
    pub trigger: Option<(f64, f64)>,
    /// Angular offset between trigger and target in degrees, present iff valid.
    pub offset_dva: Option<f64>,
    /// Dwell-qualified candidates considered in the window.
    pub fixation_count: usize,
}

/// Population accuracy over one evaluation arm.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AccuracySummary {
    pub per_user_e50: BTreeMap<String, f64>,
    pub per_user_e95: BTreeMap<String, f64>,
    /// Median over users of their median offset.
    pub u50_e50: f64,
    /// 95th percentile over users of their 95th-percentile offset.
    pub u95_e95: f64,
    pub success_rate: f64,
    /// Users excluded for having no valid interaction.
    pub excluded_users: usize,
}

const WINDOW_MS: f64 = 1000.0;

/// Splits a recording into per-target windows.
pub fn segment_by_target(rec: &Recording) -> Result<Vec<TargetWindow>, InteractionError> {
    if rec.targets.is_empty() {
        return Err(InteractionError::NoTargets);
    }
    let mut windows = Vec::with_capacity(rec.targets.len());
    for (i, &target) in rec.targets.iter().enumerate() {
        let mut end_ms = target.onset_ms + WINDOW_MS;
        if let Some(next) = rec.targets.get(i + 1) {
            end_ms = end_ms.min(next.onset_ms);
        }
        let start_index = rec.samples.partition_point(|s| s.t_ms < target.onset_ms);
        let end_index = rec.samples.partition_point(|s| s.t_ms < end_ms);
        windows.push(TargetWindow { target, start_index, end_index });
    }
    Ok(windows)
}

/// Fixations overlapping the window, clipped to it. Centroid, duration, and
/// onset are recomputed over the in-window members, so dwell time counts
/// only what happened inside the window.
pub fn fixations_in_window(
    samples: &[crate::signal::GazeSample],
    fixations: &[FixationSegment],
    window: &TargetWindow,
    fs: f64,
) -> Vec<FixationSegment> {
    if window.start_index >= window.end_index {
        return Vec::new();
    }
    fixations
        .iter()
        .filter_map(|seg| {
            let start = seg.start_index.max(window.start_index);
            let end = seg.end_index.min(window.end_index - 1);
            if start > end {
                return None;
            }
            make_segment(samples, start, end, fs)
        })
        .collect()
}

/// Selects the dwell-qualified fixation nearest the target (2-D Euclidean
/// distance between centroid and target center); ties go to the earliest
/// onset. An empty candidate set is a missed target, not an error.
pub fn rank1_fixation(
    fixations: &[FixationSegment],
    target: &TargetEvent,
    dwell_ms: f64,
) -> InteractionOutcome {
    let mut best: Option<(f64, &FixationSegment)> = None;
    let mut candidates = 0usize;
    for seg in fixations {
        if seg.duration_ms < dwell_ms {
            continue;
        }
        candidates += 1;
        let d = math::hypot(seg.centroid_x - target.x, seg.centroid_y - target.y);
        let better = match best {
            None => true,
            Some((bd, bseg)) => d < bd || (d == bd && seg.onset_ms < bseg.onset_ms),
        };
        if better {
            best = Some((d, seg));
        }
    }
    match best {
        Some((_, seg)) => {
            let trigger = (seg.centroid_x, seg.centroid_y);
            let offset = angular_offset(trigger, (target.x, target.y))
                .expect("on-screen angles are non-degenerate");
            InteractionOutcome {
                target_id: target.id,
                valid: true,
                trigger: Some(trigger),
                offset_dva: Some(offset),
                fixation_count: candidates,
            }
        }
        None => InteractionOutcome {
            target_id: target.id,
            valid: false,
            trigger: None,
            offset_dva: None,
            fixation_count: 0,
        },
    }
}

/// Angle in degrees between two gaze directions given as dva pairs.
///
/// A pair (α, β) maps to the 3-D direction (tan α, tan β, 1) at unit
/// viewing distance; the result is the arccos of the normalized dot
/// product, in [0, 180], evaluated in the atan2 form so angles near 0 keep
/// full precision (identical inputs give exactly 0).
pub fn angular_offset(g: (f64, f64), t: (f64, f64)) -> Result<f64, InteractionError> {
    let dir = |(a, b): (f64, f64)| -> Result<[f64; 3], InteractionError> {
        let rad = core::f64::consts::PI / 180.0;
        let v = [math::tan(a * rad), math::tan(b * rad), 1.0];
        if v.iter().any(|c| !c.is_finite()) {
            return Err(InteractionError::DegenerateVector);
        }
        Ok(v)
    };
    let gv = dir(g)?;
    let tv = dir(t)?;
    let dot = gv[0] * tv[0] + gv[1] * tv[1] + gv[2] * tv[2];
    let cross = [
        gv[1] * tv[2] - gv[2] * tv[1],
        gv[2] * tv[0] - gv[0] * tv[2],
        gv[0] * tv[1] - gv[1] * tv[0],
    ];
    let cross_norm = math::sqrt(cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]);
    Ok(math::atan2(cross_norm, dot) * 180.0 / core::f64::consts::PI)
}

/// Percentage of valid outcomes over `total_targets`.
pub fn success_rate(outcomes: &[InteractionOutcome], total_targets: usize) -> f64 {
    if total_targets == 0 {
        return 0.0;
    }
    let valid = outcomes.iter().filter(|o| o.valid).count();
    100.0 * valid as f64 / total_targets as f64
}

/// Classifies fixations against a recording's target track and simulates
/// one interaction per target.
pub fn simulate_interaction(
    rec: &Recording,
    fixations: &[FixationSegment],
    dwell_ms: f64,
) -> Result<Vec<InteractionOutcome>, InteractionError> {
    let windows = segment_by_target(rec)?;
    Ok(windows
        .iter()
        .map(|w| {
            let in_window = fixations_in_window(&rec.samples, fixations, w, rec.fs);
            rank1_fixation(&in_window, &w.target, dwell_ms)
        })
        .collect())
}

/// E50/E95 per user and the population roll-ups. Users with no offsets are
/// excluded from the percentiles and counted in `excluded_users`; the
/// caller supplies the already-computed success rate.
pub fn summarize_accuracy(
    per_user_offsets: &BTreeMap<String, Vec<f64>>,
    success_rate: f64,
) -> Result<AccuracySummary, InteractionError> {
    let mut per_user_e50 = BTreeMap::new();
    let mut per_user_e95 = BTreeMap::new();
    let mut excluded_users = 0usize;
    for (user, offsets) in per_user_offsets {
        match (crate::stats::median(offsets), crate::stats::percentile(offsets, 95.0)) {
            (Some(e50), Some(e95)) => {
                per_user_e50.insert(user.clone(), e50);
                per_user_e95.insert(user.clone(), e95);
            }
            _ => excluded_users += 1,
        }
    }
    let e50s: Vec<f64> = per_user_e50.values().copied().collect();
    let e95s: Vec<f64> = per_user_e95.values().copied().collect();
    let u50_e50 = crate::stats::median(&e50s).ok_or(InteractionError::EmptyPopulation)?;
    let u95_e95 = crate::stats::percentile(&e95s, 95.0).ok_or(InteractionError::EmptyPopulation)?;
    Ok(AccuracySummary {
        per_user_e50,
        per_user_e95,
        u50_e50,
        u95_e95,
        success_rate,
        excluded_users,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::GazeSample;
    use alloc::string::ToString;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    fn rec_with_targets(n: usize, targets: Vec<TargetEvent>) -> Recording {
        Recording {
            samples: (0..n).map(|i| GazeSample::valid(i as f64, 0.0, 0.0)).collect(),
            fs: 1000.0,
            subject_id: "s1".to_string(),
            session_id: "1".to_string(),
            task_tag: "RAN".to_string(),
            targets,
        }
    }

    fn target(onset: f64, x: f64, y: f64, id: u32) -> TargetEvent {
        TargetEvent { onset_ms: onset, x, y, id }
    }

    fn fix(start: usize, end: usize, cx: f64, cy: f64, fs: f64, onset: f64) -> FixationSegment {
        FixationSegment {
            start_index: start,
            end_index: end,
            centroid_x: cx,
            centroid_y: cy,
            duration_ms: (end - start + 1) as f64 * 1000.0 / fs,
            onset_ms: onset,
        }
    }

    #[test]
    fn windows_span_one_second() {
        let rec = rec_with_targets(2600, vec![target(0.0, 0.0, 0.0, 0), target(1500.0, 1.0, 0.0, 1)]);
        let w = segment_by_target(&rec).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!((w[0].start_index, w[0].end_index), (0, 1000));
        assert_eq!((w[1].start_index, w[1].end_index), (1500, 2500));
    }

    #[test]
    fn next_onset_truncates_window() {
        let rec = rec_with_targets(2000, vec![target(0.0, 0.0, 0.0, 0), target(600.0, 1.0, 0.0, 1)]);
        let w = segment_by_target(&rec).unwrap();
        assert_eq!((w[0].start_index, w[0].end_index), (0, 600));
    }

    #[test]
    fn recording_end_truncates_window() {
        let rec = rec_with_targets(400, vec![target(0.0, 0.0, 0.0, 0)]);
        let w = segment_by_target(&rec).unwrap();
        assert_eq!((w[0].start_index, w[0].end_index), (0, 400));
    }

    #[test]
    fn no_targets_is_an_error() {
        let rec = rec_with_targets(100, vec![]);
        assert_eq!(segment_by_target(&rec).unwrap_err(), InteractionError::NoTargets);
    }

    #[test]
    fn clipping_recomputes_duration_and_centroid() {
        let mut rec = rec_with_targets(300, vec![target(100.0, 0.0, 0.0, 0)]);
        for (i, s) in rec.samples.iter_mut().enumerate() {
            // 0..149 at x=1, 150.. at x=3.
            *s = GazeSample::valid(i as f64, if i < 150 { 1.0 } else { 3.0 }, 0.0);
        }
        let w = segment_by_target(&rec).unwrap();
        // A fixation overlapping the window start gets clipped to it.
        let segs = fixations_in_window(&rec.samples, &[fix(0, 149, 1.0, 0.0, 1000.0, 0.0)], &w[0], 1000.0);
        assert_eq!(segs.len(), 1);
        assert_eq!((segs[0].start_index, segs[0].end_index), (100, 149));
        assert_eq!(segs[0].duration_ms, 50.0);
        assert_eq!(segs[0].onset_ms, 100.0);
        assert_abs_diff_eq!(segs[0].centroid_x, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rank1_picks_nearest_candidate() {
        let t = target(0.0, 0.0, 0.0, 7);
        let far = fix(0, 149, 2.0, 0.0, 1000.0, 0.0);
        let near = fix(300, 449, 0.4, 0.0, 1000.0, 300.0);
        let out = rank1_fixation(&[far.clone(), near.clone()], &t, 100.0);
        assert!(out.valid);
        assert_eq!(out.trigger, Some((0.4, 0.0)));
        assert_eq!(out.fixation_count, 2);
        // Order must not matter.
        let flipped = rank1_fixation(&[near, far], &t, 100.0);
        assert_eq!(out, flipped);
    }

    #[test]
    fn dwell_filters_candidates() {
        let t = target(0.0, 0.0, 0.0, 0);
        let short = fix(0, 79, 0.0, 0.0, 1000.0, 0.0); // 80 ms
        let out = rank1_fixation(&[short], &t, 100.0);
        assert!(!out.valid);
        assert_eq!(out.fixation_count, 0);
        assert_eq!(out.offset_dva, None);
    }

    #[test]
    fn exact_hit_has_zero_offset() {
        let t = target(0.0, 1.5, -2.0, 0);
        let seg = fix(0, 149, 1.5, -2.0, 1000.0, 0.0);
        let out = rank1_fixation(&[seg], &t, 100.0);
        assert!(out.valid);
        assert_eq!(out.offset_dva, Some(0.0));
    }

    #[test]
    fn distance_tie_goes_to_earliest_onset() {
        let t = target(0.0, 0.0, 0.0, 0);
        let late = fix(500, 649, 1.0, 0.0, 1000.0, 500.0);
        let early = fix(0, 149, -1.0, 0.0, 1000.0, 0.0);
        let out = rank1_fixation(&[late, early], &t, 100.0);
        assert_eq!(out.trigger, Some((-1.0, 0.0)));
    }

    #[test]
    fn angular_offset_examples() {
        assert_eq!(angular_offset((3.0, -4.0), (3.0, -4.0)).unwrap(), 0.0);
        assert_abs_diff_eq!(angular_offset((1.0, 0.0), (0.0, 0.0)).unwrap(), 1.0, epsilon = 1e-6);
        let a = angular_offset((2.0, 5.0), (-1.0, 0.5)).unwrap();
        let b = angular_offset((-1.0, 0.5), (2.0, 5.0)).unwrap();
        assert_eq!(a, b);
        assert!(a > 0.0 && a < 180.0);
    }

    #[test]
    fn success_rate_counts_valid() {
        let valid = InteractionOutcome {
            target_id: 0,
            valid: true,
            trigger: Some((0.0, 0.0)),
            offset_dva: Some(0.1),
            fixation_count: 1,
        };
        let miss = InteractionOutcome {
            target_id: 1,
            valid: false,
            trigger: None,
            offset_dva: None,
            fixation_count: 0,
        };
        let outcomes: Vec<_> = (0..97)
            .map(|_| valid.clone())
            .chain((0..3).map(|_| miss.clone()))
            .collect();
        assert_eq!(success_rate(&outcomes, 100), 97.0);
        assert_eq!(success_rate(&[], 100), 0.0);
        assert_eq!(success_rate(&vec![valid; 100], 100), 100.0);
    }

    #[test]
    fn summary_percentiles() {
        let mut users = BTreeMap::new();
        users.insert("u1".to_string(), vec![1.0, 2.0, 3.0]);
        let s = summarize_accuracy(&users, 100.0).unwrap();
        assert_eq!(s.per_user_e50["u1"], 2.0);
        assert_eq!(s.u50_e50, 2.0);
        assert_eq!(s.u95_e95, s.per_user_e95["u1"]);
        assert_eq!(s.excluded_users, 0);

        let mut three = BTreeMap::new();
        three.insert("a".to_string(), vec![0.5]);
        three.insert("b".to_string(), vec![0.6]);
        three.insert("c".to_string(), vec![0.7]);
        three.insert("empty".to_string(), vec![]);
        let s = summarize_accuracy(&three, 50.0).unwrap();
        assert_eq!(s.u50_e50, 0.6);
        assert_eq!(s.excluded_users, 1);
        assert_eq!(s.success_rate, 50.0);
    }

    #[test]
    fn empty_population_is_an_error() {
        let mut users: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        users.insert("u1".to_string(), vec![]);
        assert_eq!(summarize_accuracy(&users, 0.0).unwrap_err(), InteractionError::EmptyPopulation);
        assert_eq!(
            summarize_accuracy(&BTreeMap::new(), 0.0).unwrap_err(),
            InteractionError::EmptyPopulation
        );
    }
}
