//! Turns a declarative operator spec into a live streaming instance.

use gazepriv_core::privatize::{
    FirFilter, GaussianNoise, Identity, KalmanSmoother, Lwma, Median3, RealtimeTargetedNoise,
    TemporalDownsampler,
};
use gazepriv_core::{PrivatizerError, PrivatizerMeta, StreamingPrivatizer};

use crate::config::PrivatizerSpec;

pub fn build_privatizer(
    spec: &PrivatizerSpec,
    seed: u64,
    fs: f64,
) -> Result<Box<dyn StreamingPrivatizer>, PrivatizerError> {
    Ok(match *spec {
        PrivatizerSpec::Identity => Box::new(Identity),
        PrivatizerSpec::Median3 => Box::new(Median3::new()),
        PrivatizerSpec::Downsample { m } => Box::new(TemporalDownsampler::new(m)?),
        PrivatizerSpec::Gaussian { variance } => Box::new(GaussianNoise::new(variance, seed)?),
        PrivatizerSpec::Lwma { window } => Box::new(Lwma::new(window)?),
        PrivatizerSpec::Targeted { radius, epsilon, param } => {
            Box::new(RealtimeTargetedNoise::new(radius, epsilon, param, seed, fs)?)
        }
        PrivatizerSpec::Fir { fc_hz, taps } => Box::new(FirFilter::lowpass(fc_hz, taps, fs)?),
        PrivatizerSpec::Kalman { q, r } => Box::new(KalmanSmoother::new(fs, q, r)?),
    })
}

/// Metadata for the report's initialization/latency columns.
pub fn spec_meta(spec: &PrivatizerSpec, fs: f64) -> Result<PrivatizerMeta, PrivatizerError> {
    Ok(build_privatizer(spec, 0, fs)?.meta())
}
