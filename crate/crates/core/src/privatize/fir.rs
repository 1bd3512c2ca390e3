use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::privatize::{LatencyRounding, PrivatizerError, PrivatizerMeta, StreamingPrivatizer};
use crate::signal::GazeSample;

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = core::f64::consts::PI * x;
        math::sin(px) / px
    }
}

/// Windowed-sinc low-pass design: ideal sinc centered at (M−1)/2, shaped by
/// a Hamming window, normalized to unit coefficient sum (DC gain 1).
///
/// Taps are computed for the first half and mirrored, so the linear-phase
/// symmetry h[k] = h[M−1−k] holds bit-exactly.
pub fn design_lowpass(fc_hz: f64, taps: usize, fs: f64) -> Result<Vec<f64>, PrivatizerError> {
    if taps < 1 {
        return Err(PrivatizerError::InvalidTaps);
    }
    if !(fs > 0.0) || !(fc_hz > 0.0) || fc_hz >= fs / 2.0 {
        return Err(PrivatizerError::InvalidCutoff);
    }
    if taps == 1 {
        return Ok(vec![1.0]);
    }

    let m = taps;
    let center = (m - 1) as f64 / 2.0;
    let ft = 2.0 * fc_hz / fs;
    let mut h = vec![0.0; m];
    for k in 0..=(m - 1) / 2 {
        let window = 0.54 - 0.46 * math::cos(core::f64::consts::TAU * k as f64 / (m - 1) as f64);
        let v = ft * sinc(ft * (k as f64 - center)) * window;
        h[k] = v;
        h[m - 1 - k] = v;
    }
    let sum: f64 = h.iter().sum();
    for v in &mut h {
        *v /= sum;
    }
    Ok(h)
}

/// |H(f)| by direct evaluation of Σ h[k]·e^{−j2πfk/fs}.
pub fn magnitude_response(coeffs: &[f64], f_hz: f64, fs: f64) -> f64 {
    let w = core::f64::consts::TAU * f_hz / fs;
    let (mut re, mut im) = (0.0, 0.0);
    for (k, &h) in coeffs.iter().enumerate() {
        re += h * math::cos(w * k as f64);
        im -= h * math::sin(w * k as f64);
    }
    math::hypot(re, im)
}

/// Causal FIR convolution with the previous M−1 inputs as state.
///
/// State starts at zero; a missing input repeats the most recent valid
/// position and a missing prefix passes through untouched.
#[derive(Debug, Clone)]
pub struct FirFilter {
    coeffs: Vec<f64>,
    // Ring buffer of the last M inputs, newest at `head`.
    state: Vec<(f64, f64)>,
    head: usize,
    started: bool,
}

impl FirFilter {
    pub fn new(coeffs: Vec<f64>) -> Result<Self, PrivatizerError> {
        if coeffs.is_empty() {
            return Err(PrivatizerError::InvalidTaps);
        }
        let m = coeffs.len();
        Ok(Self { coeffs, state: vec![(0.0, 0.0); m], head: m - 1, started: false })
    }

    pub fn lowpass(fc_hz: f64, taps: usize, fs: f64) -> Result<Self, PrivatizerError> {
        Self::new(design_lowpass(fc_hz, taps, fs)?)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
}

impl StreamingPrivatizer for FirFilter {
    fn push(&mut self, sample: GazeSample) -> Result<Option<GazeSample>, PrivatizerError> {
        let pos = match sample.pos {
            Some(p) => p,
            None if self.started => self.state[self.head],
            None => return Ok(Some(sample)),
        };
        self.started = true;
        let m = self.coeffs.len();
        self.head = (self.head + 1) % m;
        self.state[self.head] = pos;

        let (mut x, mut y) = (0.0, 0.0);
        for (k, &h) in self.coeffs.iter().enumerate() {
            let (sx, sy) = self.state[(self.head + m - k) % m];
            x += h * sx;
            y += h * sy;
        }
        Ok(Some(sample.with_pos(x, y)))
    }

    fn meta(&self) -> PrivatizerMeta {
        PrivatizerMeta {
            init_samples: 0,
            latency_samples: (self.coeffs.len() as f64 - 1.0) / 2.0,
            latency_rounding: LatencyRounding::Nearest,
        }
    }
}
