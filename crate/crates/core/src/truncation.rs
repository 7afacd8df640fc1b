//! Truncation `phi_[lo, hi]` and its dithering counterpart.
//!
//! For `tau ~ U[-1, 1]` and `lambda > 0`,
//! `E[lambda * sign(x + lambda * tau)] = truncate(x, [-lambda, lambda])`,
//! which is what makes a one-bit dithered sample a trimmed observation in
//! expectation.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Closed interval `[lo, hi]` with `lo <= hi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval<T> {
    lo: T,
    hi: T,
}

impl<T: Real> Interval<T> {
    pub fn new(lo: T, hi: T) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() {
            return Err(Error::NaN);
        }
        if lo > hi {
            return Err(Error::param("interval", format!("lo {lo} exceeds hi {hi}")));
        }
        Ok(Self { lo, hi })
    }

    /// `[-r, r]`.
    pub fn symmetric(r: T) -> Result<Self> {
        Self::new(-r, r)
    }

    pub fn lo(&self) -> T {
        self.lo
    }

    pub fn hi(&self) -> T {
        self.hi
    }

    pub fn midpoint(&self) -> T {
        (self.lo + self.hi) / T::lit(2.0)
    }

    pub fn half_width(&self) -> T {
        (self.hi - self.lo) / T::lit(2.0)
    }
}

/// Clamps `x` into `iv`.
pub fn truncate<T: Real>(x: T, iv: Interval<T>) -> Result<T> {
    if x.is_nan() {
        return Err(Error::NaN);
    }
    Ok(clamp(x, iv.lo, iv.hi))
}

#[inline]
pub(crate) fn clamp<T: Real>(x: T, lo: T, hi: T) -> T {
    if x > hi {
        hi
    } else if x < lo {
        lo
    } else {
        x
    }
}

/// Conditional mean of `lambda * sign(x + lambda * tau)` over the dither.
pub fn expected_dither_output<T: Real>(x: T, lambda: T) -> Result<T> {
    if lambda.is_nan() || lambda <= T::zero() {
        return Err(Error::param("lambda", format!("must be positive, got {lambda}")));
    }
    truncate(x, Interval::symmetric(lambda)?)
}
