//! Mean estimators built on dithered one-bit samples, plus unquantized
//! baselines.
//!
//! Randomized estimators take a root [`SeededRng`](crate::rng::SeededRng)
//! and fork named sub-streams from it (held-out selection, dithers, Haar
//! rotation), so two estimators handed the same root see the same dithers.

mod baseline;
mod full;
mod partial;

pub use baseline::{sample_mean, trimmed_mean, trimmed_mean_min_error};
pub(crate) use full::{draw_rotation, haar_rotate_tampered};
pub use full::{
    full_1d, full_multi, full_multi_robust, haar_rotate_pipeline, haar_rotate_with, quantize_full_sample,
};
pub use partial::{
    partial_1d, partial_1d_robust, partial_multi, partial_multi_robust, quantize_partial_first,
    quantize_partial_random, PartialQuantized,
};

use crate::error::{Error, Result};
use crate::quantizer::DitherLevels;
use crate::robust_agg::AggregatorId;
use crate::scalar::{l2_distance, Real};

/// Sub-stream labels forked from an estimator's root RNG.
pub(crate) mod streams {
    pub const HELD_OUT: u64 = 0x48;
    pub const DITHER: u64 = 0x44;
    pub const HAAR: u64 = 0x4F;
}

/// Bits transmitted for one unquantized real.
pub const FLOAT_BITS: usize = 32;

/// Tuning shared by the estimators. Only the fields relevant to the chosen
/// estimator are read.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorConfig<T> {
    /// Held-out (unquantized) sample count, partial setting.
    pub n0: usize,
    /// Quantile level of the held-out split, in `(0, 1/2)`.
    pub epsilon: f64,
    /// Dither levels, full setting.
    pub levels: Option<DitherLevels<T>>,
    pub aggregator: AggregatorId,
    /// Contamination level passed to the aggregator.
    pub eta_hint: f64,
    /// Randomly rotate samples before full quantization.
    pub haar: bool,
}

impl<T: Real> EstimatorConfig<T> {
    pub fn partial(n0: usize, epsilon: f64) -> Self {
        Self {
            n0,
            epsilon,
            levels: None,
            aggregator: AggregatorId::EmpiricalMean,
            eta_hint: 0.0,
            haar: false,
        }
    }

    pub fn full(levels: DitherLevels<T>) -> Self {
        Self {
            n0: 0,
            epsilon: 0.0,
            levels: Some(levels),
            aggregator: AggregatorId::EmpiricalMean,
            eta_hint: 0.0,
            haar: false,
        }
    }

    pub fn with_aggregator(mut self, aggregator: AggregatorId, eta_hint: f64) -> Self {
        self.aggregator = aggregator;
        self.eta_hint = eta_hint;
        self
    }

    pub fn with_haar(mut self, haar: bool) -> Self {
        self.haar = haar;
        self
    }

    pub(crate) fn check_partial(&self, n: usize) -> Result<()> {
        if self.n0 >= n {
            return Err(Error::param("n0", format!("held-out count {} must be below n = {n}", self.n0)));
        }
        if 2 * self.n0 > n {
            return Err(Error::param("n0", format!("held-out count {} exceeds n/2 = {}", self.n0, n as f64 / 2.0)));
        }
        if self.n0 < 2 {
            return Err(Error::param("n0", "need at least 2 held-out samples"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(Error::param("epsilon", format!("must lie in (0, 1/2), got {}", self.epsilon)));
        }
        Ok(())
    }

    pub(crate) fn levels(&self) -> Result<&DitherLevels<T>> {
        self.levels
            .as_ref()
            .ok_or_else(|| Error::Config("full quantization requires dither levels".into()))
    }
}

/// Bits sent when `n0` of `n` samples go unquantized.
pub fn bits_used_partial(n: usize, n0: usize, d: usize) -> usize {
    FLOAT_BITS * n0 * d + (n - n0) * d
}

/// Bits sent when every coordinate of every sample is one bit.
pub fn bits_used_full(n: usize, d: usize) -> usize {
    n * d
}

/// Outcome of one estimation trial.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialReport<T> {
    pub estimate: Vec<T>,
    pub true_mean: Vec<T>,
    /// `|estimate - true_mean|_2`.
    pub err_l2: T,
    pub bits_used: usize,
    pub seed: u64,
}

impl<T: Real> TrialReport<T> {
    pub fn new(estimate: Vec<T>, true_mean: Vec<T>, bits_used: usize, seed: u64) -> Result<Self> {
        if estimate.len() != true_mean.len() {
            return Err(Error::DimensionMismatch {
                expected: true_mean.len(),
                got: estimate.len(),
            });
        }
        let err_l2 = l2_distance(&estimate, &true_mean);
        Ok(Self {
            estimate,
            true_mean,
            err_l2,
            bits_used,
            seed,
        })
    }
}
