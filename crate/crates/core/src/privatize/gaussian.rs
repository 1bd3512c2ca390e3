use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::privatize::{LatencyRounding, PrivatizerError, PrivatizerMeta, StreamingPrivatizer};
use crate::signal::GazeSample;

/// Adds independent zero-mean Gaussian noise to each channel.
///
/// Draw order is x then y for every valid sample; missing samples pass
/// through without consuming randomness, so output bytes depend only on the
/// seed and the valid-sample sequence.
#[derive(Debug, Clone)]
pub struct GaussianNoise {
    dist: Normal<f64>,
    rng: ChaCha8Rng,
}

impl GaussianNoise {
    /// `variance` is σ² in dva².
    pub fn new(variance: f64, seed: u64) -> Result<Self, PrivatizerError> {
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(PrivatizerError::InvalidVariance);
        }
        let dist = Normal::new(0.0, crate::math::sqrt(variance))
            .map_err(|_| PrivatizerError::InvalidVariance)?;
        Ok(Self { dist, rng: ChaCha8Rng::seed_from_u64(seed) })
    }
}

impl StreamingPrivatizer for GaussianNoise {
    fn push(&mut self, sample: GazeSample) -> Result<Option<GazeSample>, PrivatizerError> {
        match sample.pos {
            Some((x, y)) => {
                let nx = self.dist.sample(&mut self.rng);
                let ny = self.dist.sample(&mut self.rng);
                Ok(Some(sample.with_pos(x + nx, y + ny)))
            }
            None => Ok(Some(sample)),
        }
    }

    fn meta(&self) -> PrivatizerMeta {
        PrivatizerMeta {
            init_samples: 0,
            latency_samples: 0.0,
            latency_rounding: LatencyRounding::Nearest,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn rejects_nonpositive_variance() {
        assert_eq!(GaussianNoise::new(0.0, 1).unwrap_err(), PrivatizerError::InvalidVariance);
        assert_eq!(GaussianNoise::new(-1.0, 1).unwrap_err(), PrivatizerError::InvalidVariance);
    }

    #[test]
    fn added_noise_variance_near_nominal() {
        let mut op = GaussianNoise::new(1.0, 7).unwrap();
        let n = 100_000;
        let mut dx = Vec::with_capacity(n);
        let mut dy = Vec::with_capacity(n);
        for i in 0..n {
            let out = op.push(GazeSample::valid(i as f64, 2.0, -3.0)).unwrap().unwrap();
            dx.push(out.x().unwrap() - 2.0);
            dy.push(out.y().unwrap() + 3.0);
        }
        for d in [dx, dy] {
            let mean = d.iter().sum::<f64>() / n as f64;
            let var = d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            assert!((0.95..=1.05).contains(&var), "variance {var}");
            assert!(mean.abs() < 0.02, "mean {mean}");
        }
    }

    #[test]
    fn same_seed_same_stream() {
        let run = |seed| {
            let mut op = GaussianNoise::new(0.5, seed).unwrap();
            (0..100)
                .map(|i| op.push(GazeSample::valid(i as f64, 0.0, 0.0)).unwrap().unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(42), run(42));
        assert_ne!(run(42), run(43));
    }

    #[test]
    fn missing_passes_through_without_consuming_draws() {
        let mut with_gap = GaussianNoise::new(1.0, 9).unwrap();
        let mut without = GaussianNoise::new(1.0, 9).unwrap();

        let a = with_gap.push(GazeSample::valid(0.0, 1.0, 1.0)).unwrap().unwrap();
        let gap = with_gap.push(GazeSample::missing(1.0)).unwrap().unwrap();
        let b = with_gap.push(GazeSample::valid(2.0, 1.0, 1.0)).unwrap().unwrap();

        let a2 = without.push(GazeSample::valid(0.0, 1.0, 1.0)).unwrap().unwrap();
        let b2 = without.push(GazeSample::valid(2.0, 1.0, 1.0)).unwrap().unwrap();

        assert!(gap.is_missing());
        assert_eq!(a.pos, a2.pos);
        assert_eq!(b.pos, b2.pos);
    }
}
