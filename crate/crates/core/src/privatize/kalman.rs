use crate::privatize::{LatencyRounding, PrivatizerError, PrivatizerMeta, StreamingPrivatizer};
use crate::signal::GazeSample;

/// One-channel constant-velocity Kalman filter.
///
/// State [position, velocity], transition A = [[1, Δt], [0, 1]], scalar
/// position measurement H = [1, 0]. Process noise is the continuous
/// white-noise-acceleration discretization
/// Q = q·[[Δt³/3, Δt²/2], [Δt²/2, Δt]]; R is the measurement variance.
#[derive(Debug, Clone)]
pub struct ScalarKalman {
    dt: f64,
    q: [[f64; 2]; 2],
    r: f64,
    x: [f64; 2],
    p: [[f64; 2]; 2],
}

impl ScalarKalman {
    /// Starts at state [x0, v0] with unit covariance.
    pub fn new(dt: f64, q: f64, r: f64, x0: f64, v0: f64) -> Result<Self, PrivatizerError> {
        if !(dt > 0.0) || q < 0.0 || !(r > 0.0) {
            return Err(PrivatizerError::InvalidTuning);
        }
        let q_mat = [
            [q * dt * dt * dt / 3.0, q * dt * dt / 2.0],
            [q * dt * dt / 2.0, q * dt],
        ];
        Self::with_process_noise(dt, q_mat, r, x0, v0)
    }

    /// Same filter with an explicit process-noise matrix.
    pub fn with_process_noise(
        dt: f64,
        q: [[f64; 2]; 2],
        r: f64,
        x0: f64,
        v0: f64,
    ) -> Result<Self, PrivatizerError> {
        if !(dt > 0.0) || !(r > 0.0) || q.iter().flatten().any(|v| !v.is_finite()) {
            return Err(PrivatizerError::InvalidTuning);
        }
        Ok(Self { dt, q, r, x: [x0, v0], p: [[1.0, 0.0], [0.0, 1.0]] })
    }

    pub fn state(&self) -> [f64; 2] {
        self.x
    }

    /// Time update: x ← A·x, P ← A·P·Aᵀ + Q. Returns the predicted position.
    pub fn predict(&mut self) -> f64 {
        let dt = self.dt;
        self.x = [self.x[0] + dt * self.x[1], self.x[1]];
        let p = self.p;
        self.p = [
            [
                p[0][0] + dt * (p[1][0] + p[0][1]) + dt * dt * p[1][1] + self.q[0][0],
                p[0][1] + dt * p[1][1] + self.q[0][1],
            ],
            [p[1][0] + dt * p[1][1] + self.q[1][0], p[1][1] + self.q[1][1]],
        ];
        self.x[0]
    }

    /// Measurement update with gain K = P·Hᵀ/(H·P·Hᵀ + R). Returns the
    /// updated position.
    pub fn update(&mut self, z: f64) -> Result<f64, PrivatizerError> {
        let s = self.p[0][0] + self.r;
        let k = [self.p[0][0] / s, self.p[1][0] / s];
        let innovation = z - self.x[0];
        self.x = [self.x[0] + k[0] * innovation, self.x[1] + k[1] * innovation];
        self.p = [
            [(1.0 - k[0]) * self.p[0][0], (1.0 - k[0]) * self.p[0][1]],
            [self.p[1][0] - k[1] * self.p[0][0], self.p[1][1] - k[1] * self.p[0][1]],
        ];
        let finite = self.x.iter().all(|v| v.is_finite())
            && self.p.iter().flatten().all(|v| v.is_finite());
        if finite {
            Ok(self.x[0])
        } else {
            Err(PrivatizerError::NonFiniteState)
        }
    }

    /// Kalman gain for the *current* predicted covariance (before update).
    pub fn gain(&self) -> [f64; 2] {
        let s = self.p[0][0] + self.r;
        [self.p[0][0] / s, self.p[1][0] / s]
    }

    pub fn covariance(&self) -> [[f64; 2]; 2] {
        self.p
    }
}

/// Gaze smoother: independent [`ScalarKalman`] per channel, emitting the
/// updated position estimate for every input.
///
/// The filters initialize on the first valid sample with state
/// [position, 0]; earlier missing samples pass through. A later missing
/// sample runs the prediction step only and emits the predicted position.
#[derive(Debug, Clone)]
pub struct KalmanSmoother {
    dt: f64,
    q: f64,
    r: f64,
    channels: Option<(ScalarKalman, ScalarKalman)>,
}

impl KalmanSmoother {
    pub const DEFAULT_Q: f64 = 500.0;
    pub const DEFAULT_R: f64 = 0.5;

    pub fn new(fs: f64, q: f64, r: f64) -> Result<Self, PrivatizerError> {
        if !(fs > 0.0) || q < 0.0 || !(r > 0.0) {
            return Err(PrivatizerError::InvalidTuning);
        }
        Ok(Self { dt: 1.0 / fs, q, r, channels: None })
    }

    pub fn with_defaults(fs: f64) -> Result<Self, PrivatizerError> {
        Self::new(fs, Self::DEFAULT_Q, Self::DEFAULT_R)
    }
}

impl StreamingPrivatizer for KalmanSmoother {
    fn push(&mut self, sample: GazeSample) -> Result<Option<GazeSample>, PrivatizerError> {
        let (kx, ky) = match (&mut self.channels, sample.pos) {
            (Some(ch), _) => ch,
            (None, Some((x, y))) => {
                self.channels = Some((
                    ScalarKalman::new(self.dt, self.q, self.r, x, 0.0)?,
                    ScalarKalman::new(self.dt, self.q, self.r, y, 0.0)?,
                ));
                self.channels.as_mut().unwrap()
            }
            (None, None) => return Ok(Some(sample)),
        };

        let out = match sample.pos {
            Some((x, y)) => {
                kx.predict();
                ky.predict();
                (kx.update(x)?, ky.update(y)?)
            }
            None => (kx.predict(), ky.predict()),
        };
        Ok(Some(sample.with_pos(out.0, out.1)))
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
    use approx::assert_abs_diff_eq;

    #[test]
    fn rejects_degenerate_tuning() {
        assert!(ScalarKalman::new(0.0, 1.0, 1.0, 0.0, 0.0).is_err());
        assert!(ScalarKalman::new(1.0, -1.0, 1.0, 0.0, 0.0).is_err());
        assert!(ScalarKalman::new(1.0, 1.0, 0.0, 0.0, 0.0).is_err());
        assert!(KalmanSmoother::new(0.0, 500.0, 0.5).is_err());
    }

    #[test]
    fn hand_computed_single_step() {
        // Δt=1, Q=0, R=1, x₀=[0,0], P₀=I, z=1.
        let mut kf = ScalarKalman::new(1.0, 0.0, 1.0, 0.0, 0.0).unwrap();
        kf.predict();
        let p = kf.covariance();
        assert_abs_diff_eq!(p[0][0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p[0][1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1][0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1][1], 1.0, epsilon = 1e-12);
        let k = kf.gain();
        assert_abs_diff_eq!(k[0], 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(k[1], 1.0 / 3.0, epsilon = 1e-12);
        let pos = kf.update(1.0).unwrap();
        assert_abs_diff_eq!(pos, 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_input_converges() {
        // Error envelope shrinks across epochs and the estimate settles on
        // the input (the response is slightly underdamped, so per-sample
        // monotonicity is not expected).
        let mut kf = ScalarKalman::new(
            1e-3,
            KalmanSmoother::DEFAULT_Q,
            KalmanSmoother::DEFAULT_R,
            0.0,
            0.0,
        )
        .unwrap();
        let errs: alloc::vec::Vec<f64> = (0..4000)
            .map(|_| {
                kf.predict();
                (kf.update(3.0).unwrap() - 3.0).abs()
            })
            .collect();
        let envelope =
            |range: core::ops::Range<usize>| errs[range].iter().cloned().fold(0.0, f64::max);
        let early = envelope(0..100);
        let mid = envelope(500..1000);
        let late = envelope(3500..4000);
        assert!(mid < early, "mid {mid} vs early {early}");
        assert!(late < mid, "late {late} vs mid {mid}");
        assert!(*errs.last().unwrap() < 1e-6, "final error {}", errs.last().unwrap());
    }

    #[test]
    fn ramp_input_recovers_true_velocity() {
        // 2 dva/s ramp at 1 kHz with defaults; velocity state must settle
        // on the slope.
        let mut kf =
            ScalarKalman::new(1e-3, KalmanSmoother::DEFAULT_Q, KalmanSmoother::DEFAULT_R, 0.0, 0.0)
                .unwrap();
        for i in 1..=20_000 {
            kf.predict();
            kf.update(2.0 * i as f64 * 1e-3).unwrap();
        }
        assert_abs_diff_eq!(kf.state()[1], 2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(kf.state()[0], 40.0, epsilon = 1e-6);
    }

    #[test]
    fn smoother_initializes_on_first_valid_sample() {
        let mut op = KalmanSmoother::with_defaults(1000.0).unwrap();
        let gap = GazeSample::missing(0.0);
        assert_eq!(op.push(gap).unwrap(), Some(gap));
        let first = op.push(GazeSample::valid(1.0, 2.5, -1.5)).unwrap().unwrap();
        assert_abs_diff_eq!(first.x().unwrap(), 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(first.y().unwrap(), -1.5, epsilon = 1e-12);
    }

    #[test]
    fn missing_sample_runs_prediction_only() {
        let mut op = KalmanSmoother::with_defaults(1000.0).unwrap();
        // Establish a moving state so prediction is distinguishable.
        let mut last = 0.0;
        for i in 0..500 {
            last = op
                .push(GazeSample::valid(i as f64, i as f64 * 0.01, 0.0))
                .unwrap()
                .unwrap()
                .x()
                .unwrap();
        }
        let predicted = op.push(GazeSample::missing(500.0)).unwrap().unwrap();
        assert!(!predicted.is_missing());
        // 10 dva/s ramp: the prediction keeps moving forward.
        assert!(predicted.x().unwrap() > last);
    }

    #[test]
    fn zero_latency_metadata() {
        let op = KalmanSmoother::with_defaults(1000.0).unwrap();
        assert_eq!(op.meta().init_samples, 0);
        assert_eq!(op.meta().latency_ms(1000.0), 0);
    }
}
