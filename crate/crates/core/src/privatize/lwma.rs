use alloc::vec;
use alloc::vec::Vec;

use crate::privatize::{LatencyRounding, PrivatizerError, PrivatizerMeta, StreamingPrivatizer};
use crate::signal::GazeSample;

/// Causal linearly weighted moving average over the last B samples:
///
///   s̃_i = (1/D) · Σ_{k=0}^{B−1} (k+1) · s_{i−k},   D = B(B+1)/2
///
/// Missing history before the stream start counts as zero, so the first
/// B−1 outputs are warm-up (reported via `init_samples`). The weight
/// centroid sits 2(B−1)/3 samples in the past, which is the operator's
/// group delay.
#[derive(Debug, Clone)]
pub struct Lwma {
    // Ring buffer of the last B positions, zero-filled before the start.
    buf: Vec<(f64, f64)>,
    head: usize,
    norm: f64,
}

impl Lwma {
    pub fn new(window: usize) -> Result<Self, PrivatizerError> {
        if window < 1 {
            return Err(PrivatizerError::InvalidWindow);
        }
        let norm = (window * (window + 1) / 2) as f64;
        Ok(Self { buf: vec![(0.0, 0.0); window], head: window - 1, norm })
    }

    pub fn window(&self) -> usize {
        self.buf.len()
    }

    fn last_valid(&self) -> (f64, f64) {
        self.buf[self.head]
    }
}

impl StreamingPrivatizer for Lwma {
    fn push(&mut self, sample: GazeSample) -> Result<Option<GazeSample>, PrivatizerError> {
        let pos = match sample.pos {
            Some(p) => p,
            // Hold-last-value for gaps the upstream fill missed.
            None => self.last_valid(),
        };
        let b = self.buf.len();
        self.head = (self.head + 1) % b;
        self.buf[self.head] = pos;

        let (mut sx, mut sy) = (0.0, 0.0);
        for k in 0..b {
            let (x, y) = self.buf[(self.head + b - k) % b];
            let w = (k + 1) as f64;
            sx += w * x;
            sy += w * y;
        }
        Ok(Some(sample.with_pos(sx / self.norm, sy / self.norm)))
    }

    fn meta(&self) -> PrivatizerMeta {
        let b = self.buf.len();
        PrivatizerMeta {
            init_samples: b - 1,
            latency_samples: 2.0 * (b as f64 - 1.0) / 3.0,
            // Display rounding: truncate for windows up to 50 samples,
            // round to nearest above that.
            latency_rounding: if b <= 50 { LatencyRounding::Down } else { LatencyRounding::Nearest },
        }
    }
}
