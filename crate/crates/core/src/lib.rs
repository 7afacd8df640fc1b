//! One-bit dithered mean estimation.
//!
//! A sample is quantized to one bit per coordinate as
//! `sign(x - center + level * tau)` with `tau ~ U[-1, 1]`. Averaging
//! `level * bit` recovers the mean of the truncated sample, so the bits carry
//! a trimmed-mean estimate. This crate provides
//!
//! * the full setting, with fixed dither levels `lambda` per coordinate,
//!   optionally after a Haar rotation of the samples;
//! * the partial setting, where `n0` unquantized samples fix the truncation
//!   window from empirical quantiles and the rest are sent as bits;
//! * pre- and post-quantization adversaries and robust aggregators for the
//!   corrupted multivariate case;
//! * a seeded, trial-parallel experiment harness ([`harness`]) with CSV
//!   output, also exposed through the `onebit-mean` binary.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the common double precision instantiations.

pub mod adversary;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod matrix;
pub mod quantiles;
pub mod quantizer;
pub mod rng;
pub mod robust_agg;
pub mod samplers;
pub mod scalar;
pub mod truncation;

pub use error::{Error, Result};
pub use matrix::{BitMatrix, SampleMatrix};
pub use quantiles::QuantileSplit;
pub use quantizer::DitherLevels;
pub use rng::{DitherStream, SeededRng};
pub use scalar::Real;
pub use truncation::Interval;

pub type Samples = SampleMatrix<f64>;
pub type Samples32 = SampleMatrix<f32>;
pub type Split = QuantileSplit<f64>;
pub type Split32 = QuantileSplit<f32>;
pub type Levels = DitherLevels<f64>;
pub type Levels32 = DitherLevels<f32>;
pub type EstimatorConfig = estimators::EstimatorConfig<f64>;
pub type EstimatorConfig32 = estimators::EstimatorConfig<f32>;
pub type TrialReport = estimators::TrialReport<f64>;
pub type Window = Interval<f64>;
