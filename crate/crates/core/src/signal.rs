//! Gaze data model and the preprocessing applied before privatization.
//!
//! A recording is an ordered sequence of timestamped gaze positions in
//! degrees of visual angle (dva). A sample is valid or missing as a whole:
//! the horizontal and vertical coordinates are never missing independently.
//! Preprocessing marks off-screen samples missing (`clamp_offscreen`) and
//! then repairs gaps with the most recent valid sample (`forward_fill`).

use alloc::string::String;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// One timestamped gaze observation. Coordinates are in dva; a missing
/// sample (tracking loss, blink, off-screen) carries no coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct GazeSample {
    /// Milliseconds from recording start, monotone non-decreasing.
    pub t_ms: f64,
    /// `Some((x, y))` for a valid sample, `None` when the sample is missing.
    pub pos: Option<(f64, f64)>,
}

impl GazeSample {
    pub fn valid(t_ms: f64, x: f64, y: f64) -> Self {
        Self { t_ms, pos: Some((x, y)) }
    }

    pub fn missing(t_ms: f64) -> Self {
        Self { t_ms, pos: None }
    }

    pub fn is_missing(&self) -> bool {
        self.pos.is_none()
    }

    pub fn x(&self) -> Option<f64> {
        self.pos.map(|(x, _)| x)
    }

    pub fn y(&self) -> Option<f64> {
        self.pos.map(|(_, y)| y)
    }

    /// Keeps the timestamp, replaces the position.
    pub fn with_pos(&self, x: f64, y: f64) -> Self {
        Self { t_ms: self.t_ms, pos: Some((x, y)) }
    }
}

/// A target shown during a random-saccade style task.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct TargetEvent {
    pub onset_ms: f64,
    pub x: f64,
    pub y: f64,
    /// Ordinal index within the recording.
    pub id: u32,
}

/// Screen extent in dva. Both axes are closed intervals: a sample exactly
/// on the edge counts as on-screen.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ScreenBounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl ScreenBounds {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self, SignalError> {
        if x_min < x_max && y_min < y_max {
            Ok(Self { x_min, x_max, y_min, y_max })
        } else {
            Err(SignalError::InvalidBounds)
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }
}

impl Default for ScreenBounds {
    /// GazeBase screen extent: ±23.3 dva horizontal, -18.5..=11.7 dva vertical.
    fn default() -> Self {
        Self { x_min: -23.3, x_max: 23.3, y_min: -18.5, y_max: 11.7 }
    }
}

/// One monocular recording: samples at a nominal rate plus optional target track.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Recording {
    pub samples: Vec<GazeSample>,
    /// Nominal sampling rate in Hz.
    pub fs: f64,
    pub subject_id: String,
    pub session_id: String,
    pub task_tag: String,
    /// Empty when the task has no target track.
    pub targets: Vec<TargetEvent>,
}

impl Recording {
    pub fn duration_ms(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(first), Some(last)) => last.t_ms - first.t_ms,
            _ => 0.0,
        }
    }

    /// Checks the structural invariants; ingestion calls this on every file.
    pub fn validate(&self) -> Result<(), SignalError> {
        if self.samples.is_empty() {
            return Err(SignalError::EmptyRecording);
        }
        if !(self.fs > 0.0) {
            return Err(SignalError::InvalidRate(self.fs));
        }
        let t0 = self.samples[0].t_ms;
        let t_end = self.samples[self.samples.len() - 1].t_ms;
        let mut prev_onset = f64::NEG_INFINITY;
        for target in &self.targets {
            if target.onset_ms <= prev_onset {
                return Err(SignalError::NonIncreasingTargets);
            }
            if target.onset_ms < t0 || target.onset_ms > t_end {
                return Err(SignalError::TargetOutOfSpan);
            }
            prev_onset = target.onset_ms;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SignalError {
    #[error("recording has no valid samples")]
    AllSamplesMissing,
    #[error("recording has no samples")]
    EmptyRecording,
    #[error("invalid sampling rate {0}")]
    InvalidRate(f64),
    #[error("bounds must satisfy x_min < x_max and y_min < y_max")]
    InvalidBounds,
    #[error("target onsets must be strictly increasing")]
    NonIncreasingTargets,
    #[error("target onset outside the recording time span")]
    TargetOutOfSpan,
}

/// Marks every sample outside `bounds` missing; everything else is untouched.
pub fn clamp_offscreen(rec: &Recording, bounds: &ScreenBounds) -> Recording {
    let samples = rec
        .samples
        .iter()
        .map(|s| match s.pos {
            Some((x, y)) if !bounds.contains(x, y) => GazeSample::missing(s.t_ms),
            _ => *s,
        })
        .collect();
    Recording { samples, ..rec.clone() }
}

/// Replaces every missing sample with the most recent valid one; a missing
/// prefix takes the value of the first subsequent valid sample.
///
/// Errors with [`SignalError::AllSamplesMissing`] when there is nothing to
/// fill from.
pub fn forward_fill(rec: &Recording) -> Result<Recording, SignalError> {
    let first_valid = rec
        .samples
        .iter()
        .find_map(|s| s.pos)
        .ok_or(SignalError::AllSamplesMissing)?;

    let mut last = first_valid;
    let samples = rec
        .samples
        .iter()
        .map(|s| {
            if let Some(pos) = s.pos {
                last = pos;
                *s
            } else {
                GazeSample { t_ms: s.t_ms, pos: Some(last) }
            }
        })
        .collect();
    Ok(Recording { samples, ..rec.clone() })
}

/// Fraction of missing samples, in [0, 1].
pub fn data_loss_rate(rec: &Recording) -> f64 {
    if rec.samples.is_empty() {
        return 0.0;
    }
    let missing = rec.samples.iter().filter(|s| s.is_missing()).count();
    missing as f64 / rec.samples.len() as f64
}
