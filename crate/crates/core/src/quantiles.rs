//! Empirical order statistics, per-coordinate quantile splits, and exact
//! population quantiles used as test oracles.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::matrix::SampleMatrix;
use crate::scalar::Real;

/// Slack absorbed before rounding `p * m` up, so that products such as
/// `0.7 * 10 = 7.000000000000001` still select the 7th order statistic.
const INDEX_SLACK: f64 = 1e-9;

/// 1-based order-statistic index `clamp(ceil(p * m), 1, m)`.
pub fn order_index(p: f64, m: usize) -> usize {
    let k = (p * m as f64 - INDEX_SLACK).ceil();
    (k.max(1.0) as usize).min(m)
}

fn check_level(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param("p", format!("quantile level must lie in (0, 1), got {p}")));
    }
    Ok(())
}

/// The `k`-th smallest value with `k = clamp(ceil(p * m), 1, m)`.
pub fn empirical_quantile<T: Real>(values: &[T], p: f64) -> Result<T> {
    if values.is_empty() {
        return Err(Error::Empty("empirical quantile of no values"));
    }
    check_level(p)?;
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::NaN);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("NaN filtered above"));
    Ok(sorted[order_index(p, values.len()) - 1])
}

/// Lower and upper order statistics `(x*_{eps m}, x*_{(1 - eps) m})` from one sort.
pub(crate) fn symmetric_order_stats<T: Real>(values: &[T], eps: f64) -> (T, T) {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite sample values"));
    let m = sorted.len();
    (
        sorted[order_index(eps, m) - 1],
        sorted[order_index(1.0 - eps, m) - 1],
    )
}

/// Per-coordinate truncation window `[alpha_j, beta_j]` with its centre
/// `mu1 = (alpha + beta) / 2` and half-width `delta = (beta - alpha) / 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantileSplit<T> {
    alpha: Vec<T>,
    beta: Vec<T>,
    mu1: Vec<T>,
    delta: Vec<T>,
}

impl<T: Real> QuantileSplit<T> {
    pub fn from_bounds(alpha: Vec<T>, beta: Vec<T>) -> Result<Self> {
        if alpha.len() != beta.len() {
            return Err(Error::DimensionMismatch {
                expected: alpha.len(),
                got: beta.len(),
            });
        }
        if alpha.is_empty() {
            return Err(Error::Empty("quantile split of dimension 0"));
        }
        for (a, b) in alpha.iter().zip(&beta) {
            if a.is_nan() || b.is_nan() {
                return Err(Error::NaN);
            }
            if a > b {
                return Err(Error::param("split", format!("alpha {a} exceeds beta {b}")));
            }
        }
        let two = T::lit(2.0);
        let mu1 = alpha.iter().zip(&beta).map(|(&a, &b)| (a + b) / two).collect();
        let delta = alpha.iter().zip(&beta).map(|(&a, &b)| (b - a) / two).collect();
        Ok(Self {
            alpha,
            beta,
            mu1,
            delta,
        })
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[T] {
        &self.alpha
    }

    pub fn beta(&self) -> &[T] {
        &self.beta
    }

    pub fn mu1(&self) -> &[T] {
        &self.mu1
    }

    pub fn delta(&self) -> &[T] {
        &self.delta
    }
}

/// Empirical `eps` and `1 - eps` quantiles of each held-out column.
pub fn quantile_split<T: Real>(held_out: &SampleMatrix<T>, eps: f64) -> Result<QuantileSplit<T>> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::param("epsilon", format!("must lie in (0, 1/2), got {eps}")));
    }
    if held_out.n() < 2 {
        return Err(Error::param(
            "held_out",
            format!("need at least 2 held-out samples, got {}", held_out.n()),
        ));
    }
    let (alpha, beta): (Vec<T>, Vec<T>) = (0..held_out.d())
        .map(|j| symmetric_order_stats(&held_out.column(j), eps))
        .unzip();
    QuantileSplit::from_bounds(alpha, beta)
}

/// One-dimensional law whose quantiles are known in closed form.
#[derive(Clone, Debug, PartialEq)]
pub enum Marginal {
    Gaussian { mean: f64, sd: f64 },
    /// Finitely many `(value, mass)` atoms; masses sum to one.
    Discrete { atoms: Vec<(f64, f64)> },
}

impl Marginal {
    /// Three-point law: `b` w.p. `eps`, `a` and `-a` w.p. `(1 - eps)/2` each.
    pub fn three_point(a: f64, b: f64, eps: f64) -> Self {
        Marginal::Discrete {
            atoms: vec![(b, eps), (a, (1.0 - eps) / 2.0), (-a, (1.0 - eps) / 2.0)],
        }
    }
}

const MASS_SLACK: f64 = 1e-12;

/// `Q_p(X) = sup{a : P(X >= a) >= 1 - p}`.
pub fn population_quantile(dist: &Marginal, p: f64) -> Result<f64> {
    check_level(p)?;
    match dist {
        Marginal::Gaussian { mean, sd } => {
            if *sd == 0.0 {
                return Ok(*mean);
            }
            let normal = Normal::new(*mean, *sd)
                .map_err(|e| Error::UnsupportedDistribution(e.to_string()))?;
            Ok(normal.inverse_cdf(p))
        }
        Marginal::Discrete { atoms } => {
            if atoms.is_empty() {
                return Err(Error::UnsupportedDistribution("discrete law without atoms".into()));
            }
            let mut sorted = atoms.clone();
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            // P(X >= a) is constant on (v_{k-1}, v_k], so the sup is the
            // largest atom whose upper tail still carries 1 - p.
            let mut upper_tail = 0.0;
            for &(value, mass) in sorted.iter().rev() {
                upper_tail += mass;
                if upper_tail >= 1.0 - p - MASS_SLACK {
                    return Ok(value);
                }
            }
            Ok(sorted[0].0)
        }
    }
}
