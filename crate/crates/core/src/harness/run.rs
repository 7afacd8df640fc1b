//! Trial loop: per sweep point, `trials` independent replications on
//! pre-derived RNG streams, reduced to one row per estimator.

use std::borrow::Cow;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{CovarianceKind, EstimatorKind, EstimatorSpec, ExperimentConfig, Point};
use crate::adversary::{corrupt_post, corrupt_pre, CorruptionSpec, Stage};
use crate::error::{Error, Result};
use crate::estimators::{
    draw_rotation, full_multi_robust, haar_rotate_tampered, quantize_full_sample, quantize_partial_first,
    quantize_partial_random, sample_mean, trimmed_mean_min_error, EstimatorConfig,
};
use crate::matrix::SampleMatrix;
use crate::quantizer::DitherLevels;
use crate::rng::{stream_id, SeededRng};
use crate::samplers::{low_trace_cov, CovarianceSpec, GaussianSampler};
use crate::scalar::l2_distance;

/// Stream labels. Trial `t` at grid index `g` owns `(TRIAL, g, t)`.
mod labels {
    pub const TRIAL: u64 = 0x54;
    pub const COVARIANCE: u64 = 0x43;
    pub const DATA: u64 = 0x58;
    pub const CORRUPTION: u64 = 0x41;
    pub const ESTIMATOR: u64 = 0x45;
}

/// Mean and spread of one estimator's error at one sweep point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: String,
    /// `n`, `d` or `eta`, whichever the grid sweeps.
    pub sweep: f64,
    pub estimator: String,
    pub mean_error: f64,
    /// Sample standard deviation across trials, 0 for a single trial.
    pub std_error: f64,
    pub trials: usize,
    pub seed: u64,
}

/// Runs on the current rayon pool.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(cfg.grid.len() * cfg.estimators.len());
    for g in 0..cfg.grid.len() {
        let point = cfg.point(g)?;
        let sampler = point_sampler(cfg, g, &point)?;
        let errors = (0..cfg.trials)
            .into_par_iter()
            .map(|t| trial(cfg, g, t, &point, &sampler))
            .collect::<Result<Vec<Vec<f64>>>>()?;
        for (e, spec) in cfg.estimators.iter().enumerate() {
            let column: Vec<f64> = errors.iter().map(|per_trial| per_trial[e]).collect();
            let (mean_error, std_error) = mean_and_sd(&column);
            rows.push(ResultRow {
                scenario: cfg.scenario.name().to_string(),
                sweep: cfg.grid[g],
                estimator: spec.to_string(),
                mean_error,
                std_error,
                trials: cfg.trials,
                seed: cfg.seed,
            });
        }
    }
    Ok(rows)
}

/// Runs on a dedicated pool of `threads` workers (`None`: rayon's default).
/// The rows do not depend on the thread count.
pub fn run_with_threads(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<Vec<ResultRow>> {
    match threads {
        None => run(cfg),
        Some(0) => Err(Error::param("threads", "must be at least 1")),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {k} worker threads: {e}")))?
            .install(|| run(cfg)),
    }
}

fn mean_and_sd(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (m - 1.0)).sqrt())
}

fn point_sampler(cfg: &ExperimentConfig, g: usize, point: &Point) -> Result<GaussianSampler> {
    let d = point.d;
    let mean = vec![cfg.design.mean; d];
    let spec = match cfg.design.covariance {
        CovarianceKind::Identity => return GaussianSampler::new(mean, &nalgebra::DMatrix::identity(d, d)),
        CovarianceKind::Toeplitz(rho) => CovarianceSpec::Toeplitz { d, rho },
        CovarianceKind::LowTrace => low_trace_cov(d)?,
    };
    let mut rng = SeededRng::new(cfg.seed, stream_id(&[labels::COVARIANCE, g as u64]));
    GaussianSampler::new(mean, &spec.matrix(&mut rng))
}

/// Errors of every estimator in one trial. All estimators see the same clean
/// sample and the same root estimator stream, hence the same dithers.
fn trial(cfg: &ExperimentConfig, g: usize, t: usize, point: &Point, sampler: &GaussianSampler) -> Result<Vec<f64>> {
    let root = SeededRng::new(cfg.seed, stream_id(&[labels::TRIAL, g as u64, t as u64]));
    let clean = sampler.sample(point.n, &mut root.fork(&[labels::DATA]))?;
    let truth = vec![cfg.design.mean; point.d];
    cfg.estimators
        .iter()
        .map(|spec| {
            let eta = spec.eta.unwrap_or(point.eta);
            let corruption = cfg.corruption.map(|c| CorruptionSpec { eta, ..c });
            let data = match corruption {
                Some(c) if c.stage == Stage::Pre => Cow::Owned(
                    corrupt_pre(&clean, &c, &truth, &mut root.fork(&[labels::CORRUPTION]))?.data,
                ),
                _ => Cow::Borrowed(&clean),
            };
            let post = corruption.filter(|c| c.stage == Stage::Post);
            let ctx = TrialContext {
                cfg,
                point,
                eta,
                truth: &truth,
                post,
                corruption_rng: root.fork(&[labels::CORRUPTION]),
                estimator_rng: root.fork(&[labels::ESTIMATOR]),
            };
            ctx.error(spec, &data)
        })
        .collect()
}

struct TrialContext<'a> {
    cfg: &'a ExperimentConfig,
    point: &'a Point,
    eta: f64,
    truth: &'a [f64],
    post: Option<CorruptionSpec>,
    corruption_rng: SeededRng,
    estimator_rng: SeededRng,
}

impl TrialContext<'_> {
    fn partial_config(&self) -> EstimatorConfig<f64> {
        let design = &self.cfg.design;
        EstimatorConfig::partial(design.held_out(self.point.n), design.epsilon(self.point.n, self.eta))
            .with_aggregator(design.aggregator, self.eta)
    }

    fn levels(&self) -> Result<DitherLevels<f64>> {
        DitherLevels::uniform(self.cfg.design.lambda, self.point.d)
    }

    fn univariate(&self, spec: &EstimatorSpec) -> Result<()> {
        if self.point.d != 1 {
            return Err(Error::Config(format!("`{spec}` is univariate but d = {}", self.point.d)));
        }
        Ok(())
    }

    fn error(mut self, spec: &EstimatorSpec, data: &SampleMatrix<f64>) -> Result<f64> {
        let rng = self.estimator_rng.clone();
        let estimate = match spec.kind {
            EstimatorKind::SampleMean => sample_mean(data),
            EstimatorKind::TrimmedMean => {
                self.univariate(spec)?;
                let eps = self.cfg.design.epsilon(self.point.n, self.eta);
                return trimmed_mean_min_error(data, eps, &self.cfg.design.trimmed_xis, self.truth[0]);
            }
            EstimatorKind::Partial1d | EstimatorKind::PartialMulti => {
                if spec.kind == EstimatorKind::Partial1d {
                    self.univariate(spec)?;
                }
                let mut q = quantize_partial_first(data, &self.partial_config(), &rng)?;
                if let Some(post) = &self.post {
                    q.corrupt_bits(post, &mut self.corruption_rng)?;
                }
                q.estimate()
            }
            EstimatorKind::Partial1dRobust | EstimatorKind::PartialMultiRobust => {
                let cfg = self.partial_config();
                if spec.kind == EstimatorKind::Partial1dRobust {
                    self.univariate(spec)?;
                }
                let (mut q, _) = quantize_partial_random(data, &cfg, &rng)?;
                if let Some(post) = &self.post {
                    q.corrupt_bits(post, &mut self.corruption_rng)?;
                }
                if spec.kind == EstimatorKind::Partial1dRobust {
                    q.estimate()
                } else {
                    q.estimate_with(cfg.aggregator, cfg.eta_hint)?
                }
            }
            EstimatorKind::Full1d | EstimatorKind::FullMulti | EstimatorKind::FullMultiRobust => {
                if spec.kind == EstimatorKind::Full1d {
                    self.univariate(spec)?;
                }
                let levels = self.levels()?;
                let mut bits = quantize_full_sample(data, &levels, &rng)?;
                if let Some(post) = &self.post {
                    bits = corrupt_post(&bits, post, &mut self.corruption_rng)?.data;
                }
                let aggregator = match spec.kind {
                    EstimatorKind::FullMultiRobust => self.cfg.design.aggregator,
                    _ => crate::robust_agg::AggregatorId::EmpiricalMean,
                };
                full_multi_robust(&bits, &levels, aggregator, self.eta)?
            }
            EstimatorKind::HaarFullMulti => {
                let cfg = EstimatorConfig::full(self.levels()?)
                    .with_aggregator(self.cfg.design.aggregator, self.eta)
                    .with_haar(true);
                let rotation = draw_rotation(self.point.d, &rng);
                let post = self.post;
                let corruption_rng = &mut self.corruption_rng;
                haar_rotate_tampered(data, &cfg, &rotation, &rng, |bits| match &post {
                    Some(p) => Ok(corrupt_post(&bits, p, corruption_rng)?.data),
                    None => Ok(bits),
                })?
            }
        };
        Ok(l2_distance(&estimate, self.truth))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::Pattern;
    use crate::harness::config::{Scenario, SizeRule};

    fn tiny(scenario: Scenario, trials: usize) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::preset(scenario).unwrap();
        cfg.trials = trials;
        cfg.seed = 11;
        cfg
    }

    #[test]
    fn mean_and_sd_examples() {
        assert_eq!(mean_and_sd(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_and_sd(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn fig1_row_layout() {
        let rows = run(&tiny(Scenario::Fig1, 3)).unwrap();
        assert_eq!(rows.len(), 12);
        assert_eq!(rows[0].estimator, "partial-1d");
        assert_eq!(rows[1].estimator, "sample-mean");
        assert_eq!(rows[11].sweep, 500.0);
        assert!(rows.iter().all(|r| r.mean_error >= 0.0 && r.std_error >= 0.0 && r.trials == 3));
    }

    #[test]
    fn thread_count_does_not_change_rows() {
        let cfg = tiny(Scenario::Fig1, 8);
        let one = run_with_threads(&cfg, Some(1)).unwrap();
        let four = run_with_threads(&cfg, Some(4)).unwrap();
        assert_eq!(one, four);
        assert!(run_with_threads(&cfg, Some(0)).is_err());
    }

    #[test]
    fn eta_override_changes_only_its_series() {
        let mut cfg = tiny(Scenario::Fig5, 2);
        cfg.grid = vec![10.0];
        cfg.estimators = vec![
            EstimatorSpec::with_eta(EstimatorKind::FullMulti, 0.0),
            EstimatorSpec::new(EstimatorKind::FullMulti),
        ];
        let rows = run(&cfg).unwrap();
        cfg.corruption = None;
        cfg.estimators = vec![EstimatorSpec::new(EstimatorKind::FullMulti)];
        let clean = run(&cfg).unwrap();
        assert_eq!(rows[0].mean_error, clean[0].mean_error);
        assert!(rows[1].mean_error > clean[0].mean_error);
    }

    #[test]
    fn post_corruption_reaches_every_quantized_kind() {
        let mut cfg = ExperimentConfig::from_json(
            r#"{"grid": [4], "trials": 2, "seed": 3,
                "estimators": ["sample-mean", "partial-multi", "partial-multi-robust",
                               "full-multi", "full-multi-robust", "haar-full-multi"],
                "corruption": {"stage": "post", "eta": 0.2, "pattern": "flip-random"},
                "design": {"sweep": "d", "n": {"fixed": 400}, "d": "sweep",
                           "aggregator": "coordinatewise-trimmed"}}"#,
        )
        .unwrap();
        let dirty = run(&cfg).unwrap();
        cfg.corruption = Some(CorruptionSpec::new(Stage::Post, 0.0, Pattern::FlipRandom).unwrap());
        let clean = run(&cfg).unwrap();
        assert_eq!(dirty[0].mean_error, clean[0].mean_error);
        for (a, b) in dirty.iter().zip(&clean).skip(1) {
            assert_ne!(a.mean_error, b.mean_error, "{}", a.estimator);
        }
    }

    #[test]
    fn univariate_kinds_reject_vectors() {
        let mut cfg = tiny(Scenario::Fig1, 1);
        cfg.design.d = SizeRule::Fixed(2);
        cfg.estimators = vec![EstimatorSpec::new(EstimatorKind::Partial1d)];
        assert!(run(&cfg).is_err());
    }
}
