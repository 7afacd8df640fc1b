//! Partial quantization: `n0` samples are sent as reals and calibrate a
//! per-coordinate truncation window; the other `n - n0` samples are sent as
//! one dithered bit per coordinate.

use super::{bits_used_partial, streams, EstimatorConfig};
use crate::adversary::{budget, corrupt_post_with_budget, CorruptionSpec};
use crate::error::{Error, Result};
use crate::matrix::{BitMatrix, SampleMatrix};
use crate::quantiles::{quantile_split, QuantileSplit};
use crate::quantizer::quantize_partial_rows;
use crate::rng::{DitherStream, SeededRng};
use crate::robust_agg::{aggregate, AggregatorId};
use crate::samplers::choose_without_replacement;
use crate::scalar::Real;

/// Held-out split plus the bits of the quantized block.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialQuantized<T> {
    pub split: QuantileSplit<T>,
    pub bits: BitMatrix,
    /// Total sample count, held-out rows included.
    pub n: usize,
    pub n0: usize,
}

impl<T: Real> PartialQuantized<T> {
    /// `Delta_j * mean(bits_j) + mu1_j`, from exact integer bit sums.
    pub fn estimate(&self) -> Vec<T> {
        let m = T::from_count(self.bits.n());
        self.bits
            .column_sums()
            .into_iter()
            .enumerate()
            .map(|(j, s)| self.split.delta()[j] * T::lit(s as f64) / m + self.split.mu1()[j])
            .collect()
    }

    /// Aggregate of the rows `Diag(Delta) * bits_i`, shifted back by `mu1`.
    pub fn estimate_with(&self, aggregator: AggregatorId, eta_hint: f64) -> Result<Vec<T>> {
        if aggregator == AggregatorId::EmpiricalMean {
            return Ok(self.estimate());
        }
        let centred = aggregate(aggregator, &self.bits.scaled(self.split.delta())?, eta_hint)?;
        Ok(centred
            .into_iter()
            .zip(self.split.mu1())
            .map(|(c, &m)| c + m)
            .collect())
    }

    /// Flips quantized bits in place. The budget `floor(eta * n)` counts the
    /// full sample but is capped at the `n - n0` bit rows that exist.
    pub fn corrupt_bits(&mut self, spec: &CorruptionSpec, rng: &mut SeededRng) -> Result<Vec<usize>> {
        let out = corrupt_post_with_budget(&self.bits, spec, budget(spec.eta, self.n), rng)?;
        self.bits = out.data;
        Ok(out.mask)
    }

    pub fn bits_used(&self) -> usize {
        bits_used_partial(self.n, self.n0, self.split.dim())
    }
}

/// Rows `0..n0` are held out; rows `n0..n` are quantized.
fn quantize_ordered<T: Real>(
    sample: &SampleMatrix<T>,
    cfg: &EstimatorConfig<T>,
    rng: &SeededRng,
) -> Result<PartialQuantized<T>> {
    let n = sample.n();
    cfg.check_partial(n)?;
    let held: Vec<usize> = (0..cfg.n0).collect();
    let rest: Vec<usize> = (cfg.n0..n).collect();
    let split = quantile_split(&sample.select_rows(&held)?, cfg.epsilon)?;
    let mut dithers = DitherStream::new(rng.fork(&[streams::DITHER]), sample.d());
    let bits = quantize_partial_rows(&sample.select_rows(&rest)?, &split, &mut dithers)?;
    Ok(PartialQuantized {
        split,
        bits,
        n,
        n0: cfg.n0,
    })
}

/// Holds out the first `n0` rows.
pub fn quantize_partial_first<T: Real>(
    sample: &SampleMatrix<T>,
    cfg: &EstimatorConfig<T>,
    rng: &SeededRng,
) -> Result<PartialQuantized<T>> {
    quantize_ordered(sample, cfg, rng)
}

/// Holds out `n0` rows drawn uniformly without replacement. Returns the
/// reordering used (held-out rows first, then the rest in index order).
pub fn quantize_partial_random<T: Real>(
    sample: &SampleMatrix<T>,
    cfg: &EstimatorConfig<T>,
    rng: &SeededRng,
) -> Result<(PartialQuantized<T>, Vec<usize>)> {
    cfg.check_partial(sample.n())?;
    let mut held = choose_without_replacement(sample.n(), cfg.n0, &mut rng.fork(&[streams::HELD_OUT]))?;
    held.sort_unstable();
    let mut is_held = vec![false; sample.n()];
    for &i in &held {
        is_held[i] = true;
    }
    let mut order = held;
    order.extend((0..sample.n()).filter(|&i| !is_held[i]));
    let reordered = sample.select_rows(&order)?;
    Ok((quantize_ordered(&reordered, cfg, rng)?, order))
}

fn require_univariate<T: Real>(sample: &SampleMatrix<T>) -> Result<()> {
    if sample.d() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: sample.d(),
        });
    }
    Ok(())
}

/// Univariate estimator with the first `n0` samples held out.
pub fn partial_1d<T: Real>(sample: &SampleMatrix<T>, cfg: &EstimatorConfig<T>, rng: &SeededRng) -> Result<T> {
    require_univariate(sample)?;
    Ok(quantize_partial_first(sample, cfg, rng)?.estimate()[0])
}

/// Univariate estimator with a uniformly random held-out set.
pub fn partial_1d_robust<T: Real>(
    sample: &SampleMatrix<T>,
    cfg: &EstimatorConfig<T>,
    rng: &SeededRng,
) -> Result<T> {
    require_univariate(sample)?;
    Ok(quantize_partial_random(sample, cfg, rng)?.0.estimate()[0])
}

/// Coordinatewise estimator sharing one held-out block (the first `n0` rows).
pub fn partial_multi<T: Real>(
    sample: &SampleMatrix<T>,
    cfg: &EstimatorConfig<T>,
    rng: &SeededRng,
) -> Result<Vec<T>> {
    Ok(quantize_partial_first(sample, cfg, rng)?.estimate())
}

/// Random held-out block, then `cfg.aggregator` on the scaled bit rows.
pub fn partial_multi_robust<T: Real>(
    sample: &SampleMatrix<T>,
    cfg: &EstimatorConfig<T>,
    rng: &SeededRng,
) -> Result<Vec<T>> {
    quantize_partial_random(sample, cfg, rng)?
        .0
        .estimate_with(cfg.aggregator, cfg.eta_hint)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{Pattern, Stage};

    fn ramp(n: usize) -> SampleMatrix<f64> {
        SampleMatrix::from_column(&(0..n).map(|i| ((i * 37) % n) as f64 / 8.0).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn constant_data_is_recovered_exactly() {
        let x = SampleMatrix::from_column(&[4.25; 50]).unwrap();
        let cfg = EstimatorConfig::partial(7, 0.2);
        let rng = SeededRng::new(1, 0);
        assert_eq!(partial_1d(&x, &cfg, &rng).unwrap(), 4.25);
        assert_eq!(partial_1d_robust(&x, &cfg, &rng).unwrap(), 4.25);
    }

    #[test]
    fn estimate_stays_in_window() {
        let x = ramp(101);
        let cfg = EstimatorConfig::partial(10, 0.1);
        let q = quantize_partial_first(&x, &cfg, &SeededRng::new(2, 0)).unwrap();
        let est = q.estimate()[0];
        let (m, d) = (q.split.mu1()[0], q.split.delta()[0]);
        assert!(est >= m - d && est <= m + d);
        assert_eq!(q.bits.n(), 91);
        assert_eq!(q.bits_used(), 32 * 10 + 91);
    }

    #[test]
    fn rejects_bad_held_out_counts() {
        let x = ramp(20);
        let rng = SeededRng::new(0, 0);
        assert!(partial_1d(&x, &EstimatorConfig::partial(20, 0.1), &rng).is_err());
        assert!(partial_1d(&x, &EstimatorConfig::partial(11, 0.1), &rng).is_err());
        assert!(partial_1d(&x, &EstimatorConfig::partial(5, 0.6), &rng).is_err());
        let wide = SampleMatrix::from_rows(&vec![vec![1.0, 2.0]; 10]).unwrap();
        assert!(partial_1d(&wide, &EstimatorConfig::partial(3, 0.1), &rng).is_err());
    }

    #[test]
    fn univariate_multi_matches_partial_1d() {
        let x = ramp(64);
        let cfg = EstimatorConfig::partial(8, 0.15);
        let rng = SeededRng::new(3, 3);
        assert_eq!(partial_multi(&x, &cfg, &rng).unwrap()[0], partial_1d(&x, &cfg, &rng).unwrap());
    }

    #[test]
    fn robust_with_mean_aggregator_is_plain_estimator_on_reordered_sample() {
        let rows: Vec<Vec<f64>> = (0..60).map(|i| vec![(i as f64 * 0.7).sin(), (i as f64).sqrt()]).collect();
        let x = SampleMatrix::from_rows(&rows).unwrap();
        let cfg = EstimatorConfig::partial(8, 0.2);
        let rng = SeededRng::new(4, 9);
        let (_, order) = quantize_partial_random(&x, &cfg, &rng).unwrap();
        let robust = partial_multi_robust(&x, &cfg, &rng).unwrap();
        let plain = partial_multi(&x.select_rows(&order).unwrap(), &cfg, &rng).unwrap();
        assert_eq!(robust, plain);
    }

    #[test]
    fn zero_width_window_ignores_bit_corruption() {
        let x = SampleMatrix::from_rows(&vec![vec![2.0, -1.0, 0.5]; 40]).unwrap();
        let rng = SeededRng::new(5, 0);
        for id in AggregatorId::ALL {
            let cfg = EstimatorConfig::partial(6, 0.1).with_aggregator(id, 0.1);
            let (mut q, _) = quantize_partial_random(&x, &cfg, &rng).unwrap();
            let spec = CorruptionSpec::new(Stage::Post, 0.2, Pattern::FlipRandom).unwrap();
            q.corrupt_bits(&spec, &mut SeededRng::new(6, 0)).unwrap();
            assert_eq!(q.estimate_with(id, 0.1).unwrap(), vec![2.0, -1.0, 0.5], "{id}");
        }
    }

    #[test]
    fn directional_flips_shift_by_exact_amount() {
        let x = ramp(200);
        let cfg = EstimatorConfig::partial(14, 0.1);
        let (clean, _) = quantize_partial_random(&x, &cfg, &SeededRng::new(7, 7)).unwrap();
        let spec = CorruptionSpec::new(Stage::Post, 0.05, Pattern::FlipDirectional).unwrap();
        let mut dirty = clean.clone();
        let mask = dirty.corrupt_bits(&spec, &mut SeededRng::new(8, 0)).unwrap();
        assert_eq!(mask.len(), 10);
        let shift = clean.estimate()[0] - dirty.estimate()[0];
        let expected = 2.0 * clean.split.delta()[0] * 10.0 / 186.0;
        assert!((shift - expected).abs() <= 1e-12 * (1.0 + expected.abs()), "{shift} vs {expected}");
    }
}
