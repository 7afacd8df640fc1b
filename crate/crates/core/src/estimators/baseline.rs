//! Unquantized reference estimators.

use crate::error::{Error, Result};
use crate::matrix::SampleMatrix;
use crate::quantiles::symmetric_order_stats;
use crate::scalar::Real;
use crate::truncation::clamp;

pub fn sample_mean<T: Real>(sample: &SampleMatrix<T>) -> Vec<T> {
    sample.column_means()
}

/// Two-block trimmed mean: the first `floor(xi n)` samples give the
/// `eps'` and `1 - eps'` quantiles, the remaining samples are clamped to
/// that window and averaged.
pub fn trimmed_mean<T: Real>(sample: &SampleMatrix<T>, eps_prime: f64, xi: f64) -> Result<T> {
    if sample.d() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: sample.d(),
        });
    }
    if !(xi > 0.0 && xi < 1.0) {
        return Err(Error::param("xi", format!("must lie in (0, 1), got {xi}")));
    }
    if !(eps_prime > 0.0 && eps_prime < 0.5) {
        return Err(Error::param("eps_prime", format!("must lie in (0, 1/2), got {eps_prime}")));
    }
    let values = sample.as_slice();
    let n = values.len();
    let m = (xi * n as f64 + 1e-9).floor() as usize;
    if m < 2 {
        return Err(Error::param("xi", format!("first block has {m} samples, need at least 2")));
    }
    if m >= n {
        return Err(Error::param("xi", "no samples left after the quantile block"));
    }
    let (lo, hi) = symmetric_order_stats(&values[..m], eps_prime);
    let rest = &values[m..];
    Ok(rest.iter().map(|&x| clamp(x, lo, hi)).sum::<T>() / T::from_count(rest.len()))
}

/// Smallest absolute error of [`trimmed_mean`] over a grid of block
/// fractions. Needs the true mean: this is the oracle-tuned baseline.
pub fn trimmed_mean_min_error<T: Real>(
    sample: &SampleMatrix<T>,
    eps_prime: f64,
    xis: &[f64],
    true_mean: T,
) -> Result<T> {
    let mut best: Option<T> = None;
    for &xi in xis {
        let err = (trimmed_mean(sample, eps_prime, xi)? - true_mean).abs();
        best = Some(match best {
            Some(b) if b <= err => b,
            _ => err,
        });
    }
    best.ok_or(Error::Empty("block fraction grid"))
}
