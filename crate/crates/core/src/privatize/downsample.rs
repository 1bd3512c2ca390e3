use crate::privatize::{LatencyRounding, PrivatizerError, PrivatizerMeta, StreamingPrivatizer};
use crate::signal::GazeSample;

/// Keeps every M-th sample unchanged and drops the rest (selection, not
/// interpolation). The first emission is input index M−1, so the operator
/// swallows M−1 samples up front and the output rate is fs/M. Emitted
/// samples keep their original timestamps.
#[derive(Debug, Clone)]
pub struct TemporalDownsampler {
    m: usize,
    seen: usize,
}

impl TemporalDownsampler {
    pub fn new(m: usize) -> Result<Self, PrivatizerError> {
        if m < 1 {
            return Err(PrivatizerError::InvalidFactor);
        }
        Ok(Self { m, seen: 0 })
    }

    pub fn factor(&self) -> usize {
        self.m
    }
}

impl StreamingPrivatizer for TemporalDownsampler {
    fn push(&mut self, sample: GazeSample) -> Result<Option<GazeSample>, PrivatizerError> {
        self.seen += 1;
        if self.seen == self.m {
            self.seen = 0;
            Ok(Some(sample))
        } else {
            Ok(None)
        }
    }

    fn meta(&self) -> PrivatizerMeta {
        PrivatizerMeta {
            init_samples: self.m - 1,
            latency_samples: 0.0,
            latency_rounding: LatencyRounding::Nearest,
        }
    }

    fn output_fs(&self, fs: f64) -> f64 {
        fs / self.m as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::privatize::apply_privatizer;
    use crate::signal::Recording;
    use alloc::string::ToString;
    use alloc::vec::Vec;

    fn ramp(n: usize) -> Recording {
        Recording {
            samples: (0..n).map(|i| GazeSample::valid(i as f64, i as f64 * 0.01, 0.0)).collect(),
            fs: 1000.0,
            subject_id: "s1".to_string(),
            session_id: "1".to_string(),
            task_tag: "RAN".to_string(),
            targets: Vec::new(),
        }
    }

    #[test]
    fn rejects_zero_factor() {
        assert_eq!(TemporalDownsampler::new(0).unwrap_err(), PrivatizerError::InvalidFactor);
    }

    #[test]
    fn m1_is_identity() {
        let rec = ramp(17);
        let mut op = TemporalDownsampler::new(1).unwrap();
        let out = apply_privatizer(&rec, &mut op).unwrap();
        assert_eq!(out, rec);
    }

    #[test]
    fn m4_keeps_every_fourth_sample_exactly() {
        let rec = ramp(1000);
        let mut op = TemporalDownsampler::new(4).unwrap();
        let out = apply_privatizer(&rec, &mut op).unwrap();
        assert_eq!(out.samples.len(), 250);
        for (j, s) in out.samples.iter().enumerate() {
            assert_eq!(*s, rec.samples[4 * j + 3]);
        }
        assert_eq!(out.fs, 250.0);
    }

    #[test]
    fn m20_metadata_and_rate() {
        let op = TemporalDownsampler::new(20).unwrap();
        assert_eq!(op.meta().init_samples, 19);
        assert_eq!(op.meta().latency_ms(1000.0), 0);
        assert_eq!(op.output_fs(1000.0), 50.0);
    }

    #[test]
    fn emission_count_is_floor_n_over_m() {
        for (n, m, want) in [(10_000usize, 20usize, 500usize), (7, 3, 2), (2, 3, 0)] {
            let rec = ramp(n);
            let mut op = TemporalDownsampler::new(m).unwrap();
            let out = apply_privatizer(&rec, &mut op).unwrap();
            assert_eq!(out.samples.len(), want);
        }
    }
}
