//! Full quantization: every sample becomes `d` dithered bits.

use nalgebra::DMatrix;

use super::{streams, EstimatorConfig};
use crate::error::{Error, Result};
use crate::matrix::{BitMatrix, SampleMatrix};
use crate::quantizer::{quantize_full_rows, DitherLevels};
use crate::rng::{DitherStream, SeededRng};
use crate::robust_agg::{aggregate, AggregatorId};
use crate::samplers::haar_orthogonal;
use crate::scalar::Real;

/// Quantizes every row of `sample` with the dither stream forked from `rng`.
pub fn quantize_full_sample<T: Real>(
    sample: &SampleMatrix<T>,
    levels: &DitherLevels<T>,
    rng: &SeededRng,
) -> Result<BitMatrix> {
    let mut dithers = DitherStream::new(rng.fork(&[streams::DITHER]), sample.d());
    quantize_full_rows(sample, levels, &mut dithers)
}

/// `lambda * mean(bits)` for a single column of bits.
pub fn full_1d<T: Real>(bits: &BitMatrix, lambda: T) -> Result<T> {
    if bits.d() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: bits.d(),
        });
    }
    if lambda.is_nan() || lambda <= T::zero() {
        return Err(Error::param("lambda", format!("must be positive, got {lambda}")));
    }
    Ok(scaled_column_means(bits, &[lambda])[0])
}

fn scaled_column_means<T: Real>(bits: &BitMatrix, scale: &[T]) -> Vec<T> {
    let n = T::from_count(bits.n());
    bits.column_sums()
        .into_iter()
        .zip(scale)
        .map(|(s, &l)| l * T::lit(s as f64) / n)
        .collect()
}

/// Coordinatewise `lambda_j * mean(bits_j)`.
pub fn full_multi<T: Real>(bits: &BitMatrix, levels: &DitherLevels<T>) -> Result<Vec<T>> {
    if bits.d() != levels.dim() {
        return Err(Error::DimensionMismatch {
            expected: levels.dim(),
            got: bits.d(),
        });
    }
    Ok(scaled_column_means(bits, levels.as_slice()))
}

/// Robust aggregate of the rows `Diag(lambda) * bits_i`.
pub fn full_multi_robust<T: Real>(
    bits: &BitMatrix,
    levels: &DitherLevels<T>,
    aggregator: AggregatorId,
    eta_hint: f64,
) -> Result<Vec<T>> {
    if aggregator == AggregatorId::EmpiricalMean {
        return full_multi(bits, levels);
    }
    aggregate(aggregator, &bits.scaled(levels.as_slice())?, eta_hint)
}

fn rotate_rows<T: Real>(sample: &SampleMatrix<T>, rotation: &DMatrix<f64>) -> Result<SampleMatrix<T>> {
    let d = sample.d();
    let mut data = Vec::with_capacity(sample.n() * d);
    for row in sample.rows() {
        for i in 0..d {
            let v: f64 = (0..d).map(|j| rotation[(i, j)] * row[j].as_f64()).sum();
            data.push(T::lit(v));
        }
    }
    SampleMatrix::from_vec(sample.n(), d, data)
}

/// Full pipeline on `{O x_i}` for a given orthogonal `O`, mapped back by `O^T`.
pub fn haar_rotate_with<T: Real>(
    sample: &SampleMatrix<T>,
    cfg: &EstimatorConfig<T>,
    rotation: &DMatrix<f64>,
    rng: &SeededRng,
) -> Result<Vec<T>> {
    haar_rotate_tampered(sample, cfg, rotation, rng, Ok)
}

/// As [`haar_rotate_with`], passing the bits through `tamper` before estimation.
pub(crate) fn haar_rotate_tampered<T: Real>(
    sample: &SampleMatrix<T>,
    cfg: &EstimatorConfig<T>,
    rotation: &DMatrix<f64>,
    rng: &SeededRng,
    tamper: impl FnOnce(BitMatrix) -> Result<BitMatrix>,
) -> Result<Vec<T>> {
    let d = sample.d();
    if rotation.nrows() != d || rotation.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: rotation.nrows(),
        });
    }
    let levels = cfg.levels()?;
    let rotated = rotate_rows(sample, rotation)?;
    let bits = tamper(quantize_full_sample(&rotated, levels, rng)?)?;
    let est = full_multi_robust(&bits, levels, cfg.aggregator, cfg.eta_hint)?;
    Ok((0..d)
        .map(|j| T::lit((0..d).map(|i| rotation[(i, j)] * est[i].as_f64()).sum()))
        .collect())
}

/// Draws `O ~ Haar(d)` from the root stream, estimates the mean of `{O x_i}`
/// by full quantization and returns `O^T` times that estimate.
pub fn haar_rotate_pipeline<T: Real>(
    sample: &SampleMatrix<T>,
    cfg: &EstimatorConfig<T>,
    rng: &SeededRng,
) -> Result<Vec<T>> {
    if !cfg.haar {
        return Err(Error::Config("Haar pipeline called with haar = false".into()));
    }
    haar_rotate_with(sample, cfg, &draw_rotation(sample.d(), rng), rng)
}

pub(crate) fn draw_rotation(d: usize, rng: &SeededRng) -> DMatrix<f64> {
    haar_orthogonal(d, &mut rng.fork(&[streams::HAAR]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_1d_examples() {
        let ones = BitMatrix::filled(7, 1, 1).unwrap();
        assert_eq!(full_1d(&ones, 3.0).unwrap(), 3.0);
        let half = BitMatrix::from_vec(4, 1, vec![1, -1, -1, 1]).unwrap();
        assert_eq!(full_1d(&half, 5.0).unwrap(), 0.0);
        assert!(full_1d(&BitMatrix::filled(2, 2, 1).unwrap(), 1.0).is_err());
    }

    #[test]
    fn full_multi_examples() {
        let bits = BitMatrix::from_vec(3, 2, vec![1, -1, 1, -1, 1, -1]).unwrap();
        let levels = DitherLevels::new(vec![2.0, 3.0]).unwrap();
        assert_eq!(full_multi(&bits, &levels).unwrap(), vec![2.0, -3.0]);
        assert!(full_multi(&bits, &DitherLevels::uniform(1.0, 3).unwrap()).is_err());
    }

    #[test]
    fn full_multi_separates_into_columns() {
        let bits = BitMatrix::from_vec(4, 2, vec![1, 1, -1, 1, 1, -1, 1, 1]).unwrap();
        let levels = DitherLevels::new(vec![1.5, 0.5]).unwrap();
        let joint = full_multi(&bits, &levels).unwrap();
        for (j, &est) in joint.iter().enumerate() {
            let col: Vec<i8> = (0..4).map(|i| bits.get(i, j)).collect();
            let single = full_1d(&BitMatrix::from_vec(4, 1, col).unwrap(), levels.as_slice()[j]).unwrap();
            assert_eq!(est, single);
        }
    }

    #[test]
    fn empirical_mean_aggregator_matches_plain_estimator() {
        let bits = BitMatrix::from_vec(3, 2, vec![1, -1, 1, 1, -1, 1]).unwrap();
        let levels = DitherLevels::new(vec![0.7, 1.3]).unwrap();
        assert_eq!(
            full_multi_robust(&bits, &levels, AggregatorId::EmpiricalMean, 0.1).unwrap(),
            full_multi(&bits, &levels).unwrap()
        );
    }

    #[test]
    fn identity_rotation_is_plain_full_pipeline() {
        let rows: Vec<Vec<f64>> = (0..50).map(|i| vec![(i as f64).sin(), (i as f64).cos(), 0.25]).collect();
        let sample = SampleMatrix::from_rows(&rows).unwrap();
        let levels = DitherLevels::uniform(2.0, 3).unwrap();
        let cfg = EstimatorConfig::full(levels.clone()).with_haar(true);
        let rng = SeededRng::new(8, 1);
        let rotated = haar_rotate_with(&sample, &cfg, &DMatrix::identity(3, 3), &rng).unwrap();
        let bits = quantize_full_sample(&sample, &levels, &rng).unwrap();
        assert_eq!(rotated, full_multi(&bits, &levels).unwrap());
    }

    #[test]
    fn haar_pipeline_requires_flag_and_levels() {
        let sample = SampleMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        let rng = SeededRng::new(0, 0);
        let cfg = EstimatorConfig::full(DitherLevels::uniform(1.0, 2).unwrap());
        assert!(haar_rotate_pipeline(&sample, &cfg, &rng).is_err());
        let mut no_levels = EstimatorConfig::<f64>::partial(2, 0.1).with_haar(true);
        no_levels.levels = None;
        assert!(haar_rotate_pipeline(&sample, &no_levels, &rng).is_err());
    }
}
