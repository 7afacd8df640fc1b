//! Dithered one-bit quantization maps.
//!
//! * full: `sign(x + Diag(lambda) tau)` with fixed dither levels,
//! * partial: `sign(x - mu1 + Diag(delta) tau)` with levels from a
//!   [`QuantileSplit`].
//!
//! Dithers are fresh per sample and coordinate. The batch functions address
//! row `i` of their input at block `i` of a [`DitherStream`].

use rand::RngCore;

use crate::error::{Error, Result};
use crate::matrix::{sign, BitMatrix, SampleMatrix};
use crate::quantiles::QuantileSplit;
use crate::rng::{uniform_dither, DitherStream};
use crate::scalar::Real;

/// Per-coordinate dither levels `(lambda_1, ..., lambda_d)`, all positive.
#[derive(Clone, Debug, PartialEq)]
pub struct DitherLevels<T> {
    lambda: Vec<T>,
}

impl<T: Real> DitherLevels<T> {
    pub fn new(lambda: Vec<T>) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::Empty("dither levels"));
        }
        if let Some(bad) = lambda.iter().find(|l| l.is_nan() || **l <= T::zero() || !l.is_finite()) {
            return Err(Error::param("lambda", format!("levels must be positive and finite, got {bad}")));
        }
        Ok(Self { lambda })
    }

    /// `lambda` repeated over `d` coordinates.
    pub fn uniform(lambda: T, d: usize) -> Result<Self> {
        Self::new(vec![lambda; d])
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.lambda
    }
}

/// `sign(x + level * tau)` for an explicit dither value.
#[inline]
pub fn quantize_with_dither<T: Real>(x: T, level: T, tau: T) -> i8 {
    sign(x + level * tau)
}

/// One dithered bit of a scalar with level `lambda`.
pub fn quantize_full_1d<T: Real, R: RngCore + ?Sized>(x: T, lambda: T, rng: &mut R) -> i8 {
    debug_assert!(lambda > T::zero());
    quantize_with_dither(x, lambda, uniform_dither(rng))
}

/// One dithered bit per coordinate, independent dithers.
pub fn quantize_full_multi<T: Real, R: RngCore + ?Sized>(
    x: &[T],
    levels: &DitherLevels<T>,
    rng: &mut R,
) -> Result<Vec<i8>> {
    if x.len() != levels.dim() {
        return Err(Error::DimensionMismatch {
            expected: levels.dim(),
            got: x.len(),
        });
    }
    Ok(x.iter()
        .zip(levels.as_slice())
        .map(|(&xj, &lj)| quantize_full_1d(xj, lj, rng))
        .collect())
}

/// `sign(x_j - mu1_j + delta_j * tau_j)` per coordinate.
pub fn quantize_partial<T: Real, R: RngCore + ?Sized>(
    x: &[T],
    split: &QuantileSplit<T>,
    rng: &mut R,
) -> Result<Vec<i8>> {
    if x.len() != split.dim() {
        return Err(Error::DimensionMismatch {
            expected: split.dim(),
            got: x.len(),
        });
    }
    Ok((0..x.len())
        .map(|j| quantize_with_dither(x[j] - split.mu1()[j], split.delta()[j], uniform_dither(rng)))
        .collect())
}

fn quantize_rows<T: Real>(
    sample: &SampleMatrix<T>,
    center: Option<&[T]>,
    level: &[T],
    dithers: &mut DitherStream,
) -> Result<BitMatrix> {
    let d = sample.d();
    if level.len() != d || dithers.width() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: if level.len() != d { level.len() } else { dithers.width() },
        });
    }
    let mut bits = Vec::with_capacity(sample.n() * d);
    let mut tau = vec![T::zero(); d];
    for (i, row) in sample.rows().enumerate() {
        dithers.row_into(i, &mut tau);
        for j in 0..d {
            let x = match center {
                Some(c) => row[j] - c[j],
                None => row[j],
            };
            bits.push(quantize_with_dither(x, level[j], tau[j]));
        }
    }
    BitMatrix::from_vec(sample.n(), d, bits)
}

/// Full quantization of every row.
pub fn quantize_full_rows<T: Real>(
    sample: &SampleMatrix<T>,
    levels: &DitherLevels<T>,
    dithers: &mut DitherStream,
) -> Result<BitMatrix> {
    quantize_rows(sample, None, levels.as_slice(), dithers)
}

/// Partial quantization of every row against a quantile split.
pub fn quantize_partial_rows<T: Real>(
    sample: &SampleMatrix<T>,
    split: &QuantileSplit<T>,
    dithers: &mut DitherStream,
) -> Result<BitMatrix> {
    quantize_rows(sample, Some(split.mu1()), split.delta(), dithers)
}
