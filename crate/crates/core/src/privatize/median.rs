use crate::privatize::{LatencyRounding, PrivatizerError, PrivatizerMeta, StreamingPrivatizer};
use crate::signal::GazeSample;

/// Per-channel median over the three most recent samples.
///
/// The start of the stream is padded by replicating the first valid sample
/// twice, so the first output equals the first input and emission starts
/// immediately. A missing input repeats the most recent valid position; a
/// missing prefix passes through untouched.
#[derive(Debug, Clone, Default)]
pub struct Median3 {
    // (previous-previous, previous) positions once the stream has started.
    history: Option<((f64, f64), (f64, f64))>,
}

impl Median3 {
    pub fn new() -> Self {
        Self::default()
    }
}

fn med3(a: f64, b: f64, c: f64) -> f64 {
    a.max(b).min(a.min(b).max(c))
}

impl StreamingPrivatizer for Median3 {
    fn push(&mut self, sample: GazeSample) -> Result<Option<GazeSample>, PrivatizerError> {
        let cur = match (sample.pos, &self.history) {
            (Some(p), _) => p,
            // Hold-last-value for gaps the upstream fill missed.
            (None, Some((_, prev))) => *prev,
            (None, None) => return Ok(Some(sample)),
        };
        let (p2, p1) = self.history.unwrap_or((cur, cur));
        let out = (med3(p2.0, p1.0, cur.0), med3(p2.1, p1.1, cur.1));
        self.history = Some((p1, cur));
        Ok(Some(sample.with_pos(out.0, out.1)))
    }

    fn meta(&self) -> PrivatizerMeta {
        PrivatizerMeta {
            init_samples: 0,
            latency_samples: 1.0,
            latency_rounding: LatencyRounding::Nearest,
        }
    }
}
