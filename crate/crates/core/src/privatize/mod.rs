//! Streaming privatization operators.
//!
//! Every operator is push-driven and strictly causal: `push` consumes one
//! input sample and may emit at most one output sample, computed only from
//! samples pushed so far. Warm-up (`init_samples` swallowed at the start)
//! and latency (group delay of the emitted signal) are reported via
//! [`PrivatizerMeta`] so downstream consumers can align streams.

mod downsample;
mod fir;
mod gaussian;
mod kalman;
mod lwma;
mod median;
mod targeted;

pub use downsample::TemporalDownsampler;
pub use fir::{design_lowpass, magnitude_response, FirFilter};
pub use gaussian::GaussianNoise;
pub use kalman::{KalmanSmoother, ScalarKalman};
pub use lwma::Lwma;
pub use median::Median3;
pub use targeted::{ExpParam, RealtimeTargetedNoise, TargetedNoise};

use alloc::vec::Vec;

use crate::signal::{GazeSample, Recording};

/// How a fractional latency is turned into the whole milliseconds shown in
/// summary tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatencyRounding {
    /// Round half away from zero.
    Nearest,
    /// Truncate toward zero.
    Down,
}

/// Static description of an operator's streaming behaviour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivatizerMeta {
    /// Samples consumed before the first emission.
    pub init_samples: usize,
    /// Group delay of the emitted signal, in samples at the *input* rate.
    /// May be fractional (asymmetric averagers delay by their weight
    /// centroid, which is rarely whole).
    pub latency_samples: f64,
    /// Display rule for [`PrivatizerMeta::latency_ms`].
    pub latency_rounding: LatencyRounding,
}

impl PrivatizerMeta {
    /// Latency in whole milliseconds at sampling rate `fs`, using this
    /// operator's display rounding.
    pub fn latency_ms(&self, fs: f64) -> u64 {
        let ms = self.latency_samples * 1000.0 / fs;
        let rounded = match self.latency_rounding {
            LatencyRounding::Nearest => crate::math::round(ms),
            LatencyRounding::Down => crate::math::floor(ms),
        };
        rounded as u64
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PrivatizerError {
    #[error("decimation factor must be at least 1")]
    InvalidFactor,
    #[error("noise variance must be positive")]
    InvalidVariance,
    #[error("averaging window must hold at least 1 sample")]
    InvalidWindow,
    #[error("spatial radius and privacy budget must be positive")]
    InvalidBudget,
    #[error("cutoff must lie in (0, fs/2)")]
    InvalidCutoff,
    #[error("filter needs at least 1 tap")]
    InvalidTaps,
    #[error("process and measurement noise must be positive")]
    InvalidTuning,
    #[error("filter state became non-finite")]
    NonFiniteState,
}

/// A causal one-in, at-most-one-out gaze transform.
pub trait StreamingPrivatizer {
    /// Consumes one sample. `Ok(None)` while warming up or decimating.
    fn push(&mut self, sample: GazeSample) -> Result<Option<GazeSample>, PrivatizerError>;

    fn meta(&self) -> PrivatizerMeta;

    /// Output sampling rate for input rate `fs`. Identity for everything
    /// except decimators.
    fn output_fs(&self, fs: f64) -> f64 {
        fs
    }

    /// Convenience wrapper over repeated `push`; emission count never
    /// depends on how the input was chunked.
    fn push_chunk(
        &mut self,
        samples: &[GazeSample],
    ) -> Result<Vec<GazeSample>, PrivatizerError> {
        let mut out = Vec::new();
        for &s in samples {
            if let Some(emitted) = self.push(s)? {
                out.push(emitted);
            }
        }
        Ok(out)
    }
}

/// Passes samples through untouched; the baseline arm of every comparison.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl StreamingPrivatizer for Identity {
    fn push(&mut self, sample: GazeSample) -> Result<Option<GazeSample>, PrivatizerError> {
        Ok(Some(sample))
    }

    fn meta(&self) -> PrivatizerMeta {
        PrivatizerMeta {
            init_samples: 0,
            latency_samples: 0.0,
            latency_rounding: LatencyRounding::Nearest,
        }
    }
}

/// Runs a fresh operator over a whole recording. The output keeps the
/// recording's identity fields and target track; `fs` is mapped through
/// [`StreamingPrivatizer::output_fs`].
pub fn apply_privatizer<P: StreamingPrivatizer + ?Sized>(
    rec: &Recording,
    op: &mut P,
) -> Result<Recording, PrivatizerError> {
    let samples = op.push_chunk(&rec.samples)?;
    Ok(Recording {
        samples,
        fs: op.output_fs(rec.fs),
        ..rec.clone()
    })
}
