//! Multivariate robust mean aggregators.
//!
//! These are the practical stand-ins for a polynomial-time robust mean
//! routine: every multivariate estimator under corruption hands its
//! (scaled) bit rows to one of them. Each aggregator is registered under a
//! kebab-case name that the experiment configs use verbatim.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SampleMatrix;
use crate::scalar::{l2_distance, Real};

/// Registered aggregators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AggregatorId {
    EmpiricalMean,
    CoordinatewiseTrimmed,
    GeometricMedian,
    IterativeFilter,
}

impl AggregatorId {
    pub const ALL: [AggregatorId; 4] = [
        AggregatorId::EmpiricalMean,
        AggregatorId::CoordinatewiseTrimmed,
        AggregatorId::GeometricMedian,
        AggregatorId::IterativeFilter,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AggregatorId::EmpiricalMean => "empirical-mean",
            AggregatorId::CoordinatewiseTrimmed => "coordinatewise-trimmed",
            AggregatorId::GeometricMedian => "geometric-median",
            AggregatorId::IterativeFilter => "iterative-filter",
        }
    }
}

impl fmt::Display for AggregatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AggregatorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AggregatorId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::UnknownAggregator(s.to_string()))
    }
}

/// A vector estimate of the common mean of a set of rows.
pub trait Aggregator<T: Real> {
    fn aggregate(&self, rows: &SampleMatrix<T>, eta_hint: f64) -> Result<Vec<T>>;
}

/// Dispatches to the aggregator registered under `id`.
pub fn aggregate<T: Real>(id: AggregatorId, rows: &SampleMatrix<T>, eta_hint: f64) -> Result<Vec<T>> {
    match id {
        AggregatorId::EmpiricalMean => EmpiricalMean.aggregate(rows, eta_hint),
        AggregatorId::CoordinatewiseTrimmed => CoordinatewiseTrimmed.aggregate(rows, eta_hint),
        AggregatorId::GeometricMedian => GeometricMedian::default().aggregate(rows, eta_hint),
        AggregatorId::IterativeFilter => IterativeFilter.aggregate(rows, eta_hint),
    }
}

/// Same as [`aggregate`], looking the aggregator up by name.
pub fn aggregate_by_name<T: Real>(name: &str, rows: &SampleMatrix<T>, eta_hint: f64) -> Result<Vec<T>> {
    aggregate(name.parse()?, rows, eta_hint)
}

fn check_hint(eta_hint: f64) -> Result<()> {
    if !(0.0..0.5).contains(&eta_hint) {
        return Err(Error::param("eta_hint", format!("must lie in [0, 1/2), got {eta_hint}")));
    }
    Ok(())
}

fn ceil_count(x: f64) -> usize {
    (x - 1e-9).ceil().max(0.0) as usize
}

fn median<T: Real>(values: &mut [T]) -> T {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite rows"));
    let m = values.len();
    if m % 2 == 1 {
        values[m / 2]
    } else {
        (values[m / 2 - 1] + values[m / 2]) / T::lit(2.0)
    }
}

fn coordinatewise_median<T: Real>(rows: &SampleMatrix<T>, keep: &[usize]) -> Vec<T> {
    let mut buf = Vec::with_capacity(keep.len());
    (0..rows.d())
        .map(|j| {
            buf.clear();
            buf.extend(keep.iter().map(|&i| rows.get(i, j)));
            median(&mut buf)
        })
        .collect()
}

/// Column means; ignores the hint.
#[derive(Clone, Copy, Debug, Default)]
pub struct EmpiricalMean;

impl<T: Real> Aggregator<T> for EmpiricalMean {
    fn aggregate(&self, rows: &SampleMatrix<T>, eta_hint: f64) -> Result<Vec<T>> {
        check_hint(eta_hint)?;
        Ok(rows.column_means())
    }
}

/// Per coordinate, drops `ceil((eta + 1/sqrt(n)) n)` values from each tail
/// and averages the rest.
#[derive(Clone, Copy, Debug, Default)]
pub struct CoordinatewiseTrimmed;

impl CoordinatewiseTrimmed {
    pub fn trim_count(n: usize, eta_hint: f64) -> usize {
        let nf = n as f64;
        let k = ceil_count((eta_hint + 1.0 / nf.sqrt()) * nf);
        k.min((n - 1) / 2)
    }
}

impl<T: Real> Aggregator<T> for CoordinatewiseTrimmed {
    fn aggregate(&self, rows: &SampleMatrix<T>, eta_hint: f64) -> Result<Vec<T>> {
        check_hint(eta_hint)?;
        let n = rows.n();
        let k = Self::trim_count(n, eta_hint);
        Ok((0..rows.d())
            .map(|j| {
                let mut col = rows.column(j);
                col.sort_by(|a, b| a.partial_cmp(b).expect("finite rows"));
                let kept = &col[k..n - k];
                kept.iter().copied().sum::<T>() / T::from_count(kept.len())
            })
            .collect())
    }
}

/// Weiszfeld iteration for `argmin_y sum_i |y - row_i|_2`.
#[derive(Clone, Copy, Debug)]
pub struct GeometricMedian {
    pub tol: f64,
    pub max_iter: usize,
    /// Shift applied to an iterate that lands on a data row.
    pub anchor_shift: f64,
}

impl Default for GeometricMedian {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 500,
            anchor_shift: 1e-12,
        }
    }
}

/// Result of a geometric-median solve.
#[derive(Clone, Debug)]
pub struct WeiszfeldOutcome<T> {
    pub point: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
    /// Objective at the start point and after every accepted step.
    pub objective: Vec<T>,
}

pub fn weiszfeld_objective<T: Real>(rows: &SampleMatrix<T>, y: &[T]) -> T {
    rows.rows().map(|r| l2_distance(r, y)).sum()
}

impl GeometricMedian {
    pub fn solve<T: Real>(&self, rows: &SampleMatrix<T>) -> WeiszfeldOutcome<T> {
        let d = rows.d();
        let all: Vec<usize> = (0..rows.n()).collect();
        let mut y = coordinatewise_median(rows, &all);
        let mut objective = vec![weiszfeld_objective(rows, &y)];
        if rows.n() == 1 {
            return WeiszfeldOutcome {
                point: rows.row(0).to_vec(),
                iterations: 0,
                converged: true,
                objective,
            };
        }
        let shift = T::lit(self.anchor_shift);
        let mut next = vec![T::zero(); d];
        for it in 1..=self.max_iter {
            // an iterate sitting on a data row has an undefined weight
            let mut dist: Vec<T> = rows.rows().map(|r| l2_distance(r, &y)).collect();
            if dist.iter().any(|&v| v == T::zero()) {
                for v in y.iter_mut() {
                    *v = *v + shift;
                }
                dist = rows.rows().map(|r| l2_distance(r, &y)).collect();
            }
            next.iter_mut().for_each(|v| *v = T::zero());
            let mut wsum = T::zero();
            for (r, &dv) in rows.rows().zip(&dist) {
                if dv == T::zero() {
                    continue;
                }
                let w = T::one() / dv;
                wsum = wsum + w;
                for (acc, &x) in next.iter_mut().zip(r) {
                    *acc = *acc + w * x;
                }
            }
            for v in next.iter_mut() {
                *v = *v / wsum;
            }
            let step = l2_distance(&next, &y);
            let scale = y.iter().fold(T::one(), |m, v| m.max(v.abs()));
            let tol = T::lit(self.tol).max(T::lit(16.0) * T::epsilon() * scale);
            y.copy_from_slice(&next);
            objective.push(weiszfeld_objective(rows, &y));
            if step <= tol {
                return WeiszfeldOutcome {
                    point: y,
                    iterations: it,
                    converged: true,
                    objective,
                };
            }
        }
        WeiszfeldOutcome {
            point: y,
            iterations: self.max_iter,
            converged: false,
            objective,
        }
    }
}

impl<T: Real> Aggregator<T> for GeometricMedian {
    fn aggregate(&self, rows: &SampleMatrix<T>, eta_hint: f64) -> Result<Vec<T>> {
        check_hint(eta_hint)?;
        Ok(self.solve(rows).point)
    }
}

/// Removes, one at a time, the row farthest from the coordinatewise median
/// of the rows still kept, until `ceil(eta n)` rows are gone, then averages
/// the survivors.
#[derive(Clone, Copy, Debug, Default)]
pub struct IterativeFilter;

impl IterativeFilter {
    pub fn removal_count(n: usize, eta_hint: f64) -> usize {
        ceil_count(eta_hint * n as f64).min(n - 1)
    }

    /// Indices of the rows kept after filtering, in ascending order.
    pub fn kept_rows<T: Real>(rows: &SampleMatrix<T>, eta_hint: f64) -> Vec<usize> {
        let mut keep: Vec<usize> = (0..rows.n()).collect();
        for _ in 0..Self::removal_count(rows.n(), eta_hint) {
            let centre = coordinatewise_median(rows, &keep);
            let (pos, _) = keep
                .iter()
                .enumerate()
                .map(|(pos, &i)| (pos, l2_distance(rows.row(i), &centre)))
                .fold((0, T::neg_infinity()), |best, cur| if cur.1 > best.1 { cur } else { best });
            keep.remove(pos);
        }
        keep
    }
}

impl<T: Real> Aggregator<T> for IterativeFilter {
    fn aggregate(&self, rows: &SampleMatrix<T>, eta_hint: f64) -> Result<Vec<T>> {
        check_hint(eta_hint)?;
        let keep = Self::kept_rows(rows, eta_hint);
        Ok(rows.select_rows(&keep)?.column_means())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use crate::samplers::GaussianSampler;

    #[test]
    fn names_round_trip_and_unknown_is_rejected() {
        for id in AggregatorId::ALL {
            assert_eq!(id.name().parse::<AggregatorId>().unwrap(), id);
        }
        assert!(matches!("median-of-means".parse::<AggregatorId>(), Err(Error::UnknownAggregator(_))));
        let rows = SampleMatrix::from_rows(&[vec![1.0]]).unwrap();
        assert!(aggregate_by_name("nope", &rows, 0.0).is_err());
    }

    #[test]
    fn singleton_is_returned_verbatim() {
        let rows = SampleMatrix::from_rows(&[vec![1.5, -2.0, 3.25]]).unwrap();
        for id in AggregatorId::ALL {
            assert_eq!(aggregate(id, &rows, 0.2).unwrap(), vec![1.5, -2.0, 3.25], "{id}");
        }
    }

    #[test]
    fn geometric_median_of_symmetric_pairs() {
        let v = [3.0, -1.0, 0.5];
        let ws = [[1.0, 2.0, -0.5], [0.3, -4.0, 1.0], [-2.0, 0.0, 0.7], [0.1, 0.1, 5.0]];
        let rows: Vec<Vec<f64>> = ws
            .iter()
            .flat_map(|w| {
                [
                    (0..3).map(|j| v[j] + w[j]).collect::<Vec<_>>(),
                    (0..3).map(|j| v[j] - w[j]).collect::<Vec<_>>(),
                ]
            })
            .collect();
        let gm = aggregate(AggregatorId::GeometricMedian, &SampleMatrix::from_rows(&rows).unwrap(), 0.0).unwrap();
        for j in 0..3 {
            assert!((gm[j] - v[j]).abs() < 1e-6, "{gm:?}");
        }
    }

    #[test]
    fn trimmed_drops_the_outlier_block() {
        let mut rows = vec![vec![0.0; 10]; 90];
        rows.extend(vec![vec![10.0; 10]; 10]);
        let m = SampleMatrix::from_rows(&rows).unwrap();
        assert_eq!(CoordinatewiseTrimmed::trim_count(100, 0.1), 20);
        let est: Vec<f64> = aggregate(AggregatorId::CoordinatewiseTrimmed, &m, 0.1).unwrap();
        assert!(est.iter().all(|v| v.abs() < 1e-6), "{est:?}");
    }

    #[test]
    fn filter_removes_planted_outliers() {
        let mut rng = SeededRng::new(4, 0);
        let clean = GaussianSampler::standard(5).sample(200, &mut rng).unwrap();
        let mut rows: Vec<Vec<f64>> = clean.rows().map(<[f64]>::to_vec).collect();
        for r in rows.iter_mut().take(10) {
            r.iter_mut().for_each(|v| *v += 50.0);
        }
        let m = SampleMatrix::from_rows(&rows).unwrap();
        let keep = IterativeFilter::kept_rows(&m, 0.05);
        assert_eq!(keep, (10..200).collect::<Vec<_>>());
    }

    #[test]
    fn weiszfeld_objective_non_increasing() {
        let mut rng = SeededRng::new(12, 1);
        let mut m = GaussianSampler::standard(4).sample(300, &mut rng).unwrap();
        for i in 0..15 {
            m.set_row(i, &[30.0, -30.0, 5.0, 100.0]);
        }
        let out = GeometricMedian::default().solve(&m);
        assert!(out.converged);
        for w in out.objective.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn collision_with_a_data_row_is_handled() {
        // start point (coordinatewise median) coincides with the middle row
        let rows = SampleMatrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap();
        let gm: Vec<f64> = aggregate(AggregatorId::GeometricMedian, &rows, 0.0).unwrap();
        assert!(gm.iter().all(|v| v.is_finite()));
        assert!((gm[0] - 1.0).abs() < 1e-6 && (gm[1] - 1.0).abs() < 1e-6, "{gm:?}");
    }

    #[test]
    fn rejects_bad_hint() {
        let rows = SampleMatrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        assert!(aggregate(AggregatorId::EmpiricalMean, &rows, 0.5).is_err());
        assert!(aggregate(AggregatorId::IterativeFilter, &rows, -0.1).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let rows = SampleMatrix::from_rows(&[vec![1.0f32, 2.0], vec![3.0, 4.0], vec![100.0, -50.0]]).unwrap();
        for id in AggregatorId::ALL {
            let est = aggregate(id, &rows, 0.3).unwrap();
            assert!(est.iter().all(|v| v.is_finite()), "{id}");
        }
    }
}
