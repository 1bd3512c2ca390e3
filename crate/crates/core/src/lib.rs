//! Real-time gaze privatization primitives.
//!
//! This crate implements causal, push-driven operators that reduce the
//! person-identifying content of an eye-tracking stream (median filter,
//! temporal downsampling, Gaussian noise, weighted-average smoothing,
//! targeted planar-Laplace noise, windowed-sinc FIR filtering, and a
//! constant-velocity Kalman filter), together with the machinery needed
//! to evaluate them offline: real-time fixation/saccade classification,
//! simulated dwell-based target selection with spatial-accuracy metrics,
//! and a Rank-1 identification-rate privacy metric over pluggable
//! embeddings.
//!
//! The crate is `no_std`-compatible (with `alloc`); enable the `libm`
//! feature instead of `std` for embedded targets.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("enable either the `std` or the `libm` feature");

pub mod classify;
pub mod interaction;
pub(crate) mod math;
pub mod privacy;
pub mod privatize;
pub mod signal;
pub mod stats;

pub use privatize::{PrivatizerError, PrivatizerMeta, StreamingPrivatizer};
pub use signal::{GazeSample, Recording, ScreenBounds, SignalError, TargetEvent};
