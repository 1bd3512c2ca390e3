use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::classify::{Classification, FixationSegment, MovementLabel};
use crate::signal::GazeSample;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IdtParams {
    /// Maximum window spread (max−min summed over both channels), dva.
    pub dispersion_threshold_dva: f64,
    pub min_duration_ms: f64,
}

impl Default for IdtParams {
    fn default() -> Self {
        Self { dispersion_threshold_dva: 0.5, min_duration_ms: 32.0 }
    }
}

/// Streaming dispersion-threshold fixation detector.
///
/// Grows a window while its dispersion stays within threshold. When the
/// next sample would exceed it, a window at or above the minimum duration
/// closes as a fixation (the breaking sample starts the next window); a
/// shorter window slides forward instead. Labels are therefore deferred by
/// at most the open window length; [`IdtClassifier::finish`] flushes the
/// final window.
#[derive(Debug, Clone)]
pub struct IdtClassifier {
    params: IdtParams,
    fs: f64,
    min_len: usize,
    // Open window: positions with their stream indices and timestamps.
    window: VecDeque<(usize, f64, (f64, f64))>,
    // Extremes and coordinate sums over the open window.
    max_x: f64,
    min_x: f64,
    max_y: f64,
    min_y: f64,
    sum_x: f64,
    sum_y: f64,
    next_index: usize,
    last_valid: Option<(f64, f64)>,
}

impl IdtClassifier {
    pub fn new(fs: f64, params: IdtParams) -> Self {
        // Window length making duration_ms reach the minimum.
        let min_len = crate::math::ceil(params.min_duration_ms * fs / 1000.0) as usize;
        Self {
            params,
            fs,
            min_len: min_len.max(1),
            window: VecDeque::new(),
            max_x: f64::NEG_INFINITY,
            min_x: f64::INFINITY,
            max_y: f64::NEG_INFINITY,
            min_y: f64::INFINITY,
            sum_x: 0.0,
            sum_y: 0.0,
            next_index: 0,
            last_valid: None,
        }
    }

    pub fn params(&self) -> IdtParams {
        self.params
    }

    fn dispersion_with(&self, (x, y): (f64, f64)) -> f64 {
        let max_x = self.max_x.max(x);
        let min_x = self.min_x.min(x);
        let max_y = self.max_y.max(y);
        let min_y = self.min_y.min(y);
        (max_x - min_x) + (max_y - min_y)
    }

    fn grow(&mut self, entry: (usize, f64, (f64, f64))) {
        let (x, y) = entry.2;
        self.max_x = self.max_x.max(x);
        self.min_x = self.min_x.min(x);
        self.max_y = self.max_y.max(y);
        self.min_y = self.min_y.min(y);
        self.sum_x += x;
        self.sum_y += y;
        self.window.push_back(entry);
    }

    fn recompute_extremes(&mut self) {
        self.max_x = f64::NEG_INFINITY;
        self.min_x = f64::INFINITY;
        self.max_y = f64::NEG_INFINITY;
        self.min_y = f64::INFINITY;
        self.sum_x = 0.0;
        self.sum_y = 0.0;
        for &(_, _, (x, y)) in &self.window {
            self.max_x = self.max_x.max(x);
            self.min_x = self.min_x.min(x);
            self.max_y = self.max_y.max(y);
            self.min_y = self.min_y.min(y);
            self.sum_x += x;
            self.sum_y += y;
        }
    }

    fn close_window(&mut self) -> FixationSegment {
        let n = self.window.len();
        let (start, onset, _) = *self.window.front().expect("non-empty window");
        let (end, _, _) = *self.window.back().expect("non-empty window");
        let seg = FixationSegment {
            start_index: start,
            end_index: end,
            centroid_x: self.sum_x / n as f64,
            centroid_y: self.sum_y / n as f64,
            duration_ms: n as f64 * 1000.0 / self.fs,
            onset_ms: onset,
        };
        self.window.clear();
        self.recompute_extremes();
        seg
    }

    /// Consumes one sample; returns a fixation when an open window closes.
    pub fn push(&mut self, sample: GazeSample) -> Option<FixationSegment> {
        let index = self.next_index;
        self.next_index += 1;

        let pos = match sample.pos.or(self.last_valid) {
            Some(p) => p,
            // Missing prefix: nothing to window yet.
            None => return None,
        };
        self.last_valid = Some(pos);
        let entry = (index, sample.t_ms, pos);

        if self.window.is_empty() || self.dispersion_with(pos) <= self.params.dispersion_threshold_dva {
            self.grow(entry);
            return None;
        }

        if self.window.len() >= self.min_len {
            let seg = self.close_window();
            self.grow(entry);
            return Some(seg);
        }

        // Too short to keep: slide until the new sample fits.
        self.grow(entry);
        while self.dispersion() > self.params.dispersion_threshold_dva {
            self.window.pop_front();
            self.recompute_extremes();
        }
        None
    }

    fn dispersion(&self) -> f64 {
        if self.window.is_empty() {
            0.0
        } else {
            (self.max_x - self.min_x) + (self.max_y - self.min_y)
        }
    }

    /// Flushes the open window at end of stream.
    pub fn finish(&mut self) -> Option<FixationSegment> {
        if self.window.len() >= self.min_len {
            Some(self.close_window())
        } else {
            self.window.clear();
            self.recompute_extremes();
            None
        }
    }
}

/// Batch wrapper: runs the streaming classifier over the whole stream and
/// materializes per-sample labels (fixation members FIXATION, everything
/// else SACCADE).
pub fn idt_classify(samples: &[GazeSample], fs: f64, params: IdtParams) -> Classification {
    let mut clf = IdtClassifier::new(fs, params);
    let mut fixations = Vec::new();
    for &s in samples {
        if let Some(seg) = clf.push(s) {
            fixations.push(seg);
        }
    }
    if let Some(seg) = clf.finish() {
        fixations.push(seg);
    }
    let mut labels = vec![MovementLabel::Saccade; samples.len()];
    for seg in &fixations {
        for label in &mut labels[seg.start_index..=seg.end_index] {
            *label = MovementLabel::Fixation;
        }
    }
    Classification { labels, fixations }
}
