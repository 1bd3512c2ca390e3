use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::classify::{IkfClassifier, MovementLabel};
use crate::math;
use crate::privatize::{LatencyRounding, PrivatizerError, PrivatizerMeta, StreamingPrivatizer};
use crate::signal::GazeSample;

/// How the planar-Laplace magnitude parameter λ = r/ε is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ExpParam {
    /// λ is the exponential scale: mean displacement radius λ dva.
    Scale,
    /// λ is the exponential rate: mean displacement radius 1/λ dva.
    Rate,
}

/// Planar Laplace perturbation applied to saccade-labeled samples only.
///
/// A perturbed sample is displaced by (ρ·cosθ, ρ·sinθ) with θ ~ U(0, 2π)
/// drawn first, then ρ from an exponential distribution with λ = r/ε read
/// per [`ExpParam`]. Fixation, unknown, and missing samples pass through
/// bit-identical without consuming randomness.
#[derive(Debug, Clone)]
pub struct TargetedNoise {
    exp: Exp<f64>,
    rng: ChaCha8Rng,
    mean_rho: f64,
}

impl TargetedNoise {
    /// Defaults in the evaluation configs: r = 1.5 dva, ε = 0.5, so λ = 3.
    pub fn new(radius: f64, epsilon: f64, param: ExpParam, seed: u64) -> Result<Self, PrivatizerError> {
        if !(radius > 0.0) || !(epsilon > 0.0) || !radius.is_finite() || !epsilon.is_finite() {
            return Err(PrivatizerError::InvalidBudget);
        }
        let lambda = radius / epsilon;
        let (rate, mean_rho) = match param {
            ExpParam::Scale => (1.0 / lambda, lambda),
            ExpParam::Rate => (lambda, 1.0 / lambda),
        };
        let exp = Exp::new(rate).map_err(|_| PrivatizerError::InvalidBudget)?;
        Ok(Self { exp, rng: ChaCha8Rng::seed_from_u64(seed), mean_rho })
    }

    /// Expected displacement radius in dva under the configured reading.
    pub fn mean_displacement(&self) -> f64 {
        self.mean_rho
    }

    pub fn push_labeled(&mut self, sample: GazeSample, label: MovementLabel) -> GazeSample {
        match (sample.pos, label) {
            (Some((x, y)), MovementLabel::Saccade) => {
                let theta = self.rng.random_range(0.0..core::f64::consts::TAU);
                let rho = self.exp.sample(&mut self.rng);
                sample.with_pos(x + rho * math::cos(theta), y + rho * math::sin(theta))
            }
            _ => sample,
        }
    }
}

/// [`TargetedNoise`] driven by a built-in streaming IKF classifier, so the
/// operator fits the label-free [`StreamingPrivatizer`] interface. The
/// classifier's warm-up labels are UNKNOWN, which pass through unperturbed.
#[derive(Debug, Clone)]
pub struct RealtimeTargetedNoise {
    classifier: IkfClassifier,
    noise: TargetedNoise,
}

impl RealtimeTargetedNoise {
    pub fn new(radius: f64, epsilon: f64, param: ExpParam, seed: u64, fs: f64) -> Result<Self, PrivatizerError> {
        Ok(Self {
            classifier: IkfClassifier::new(fs),
            noise: TargetedNoise::new(radius, epsilon, param, seed)?,
        })
    }

    pub fn with_classifier(classifier: IkfClassifier, noise: TargetedNoise) -> Self {
        Self { classifier, noise }
    }
}

impl StreamingPrivatizer for RealtimeTargetedNoise {
    fn push(&mut self, sample: GazeSample) -> Result<Option<GazeSample>, PrivatizerError> {
        let label = self.classifier.push(sample);
        Ok(Some(self.noise.push_labeled(sample, label)))
    }

    fn meta(&self) -> PrivatizerMeta {
        PrivatizerMeta {
            init_samples: 0,
            latency_samples: 0.0,
            latency_rounding: LatencyRounding::Nearest,
        }
    }
}
