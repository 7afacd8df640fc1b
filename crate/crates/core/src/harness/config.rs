//! Experiment configuration, JSON (de)serialization and the built-in presets.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::adversary::{CorruptionSpec, Pattern, Stage};
use crate::error::{Error, Result};
use crate::robust_agg::AggregatorId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Custom,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::Fig1,
        Scenario::Fig2,
        Scenario::Fig3,
        Scenario::Fig4,
        Scenario::Fig5,
        Scenario::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Fig1 => "fig1",
            Scenario::Fig2 => "fig2",
            Scenario::Fig3 => "fig3",
            Scenario::Fig4 => "fig4",
            Scenario::Fig5 => "fig5",
            Scenario::Custom => "custom",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| Error::UnknownScenario(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    SampleMean,
    TrimmedMean,
    Partial1d,
    Partial1dRobust,
    PartialMulti,
    PartialMultiRobust,
    Full1d,
    FullMulti,
    FullMultiRobust,
    HaarFullMulti,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 10] = [
        EstimatorKind::SampleMean,
        EstimatorKind::TrimmedMean,
        EstimatorKind::Partial1d,
        EstimatorKind::Partial1dRobust,
        EstimatorKind::PartialMulti,
        EstimatorKind::PartialMultiRobust,
        EstimatorKind::Full1d,
        EstimatorKind::FullMulti,
        EstimatorKind::FullMultiRobust,
        EstimatorKind::HaarFullMulti,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::SampleMean => "sample-mean",
            EstimatorKind::TrimmedMean => "trimmed-mean",
            EstimatorKind::Partial1d => "partial-1d",
            EstimatorKind::Partial1dRobust => "partial-1d-robust",
            EstimatorKind::PartialMulti => "partial-multi",
            EstimatorKind::PartialMultiRobust => "partial-multi-robust",
            EstimatorKind::Full1d => "full-1d",
            EstimatorKind::FullMulti => "full-multi",
            EstimatorKind::FullMultiRobust => "full-multi-robust",
            EstimatorKind::HaarFullMulti => "haar-full-multi",
        }
    }
}

/// An estimator series: a kind plus an optional corruption level that
/// replaces the experiment's own, written `kind` or `kind@eta=0.1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct EstimatorSpec {
    pub kind: EstimatorKind,
    pub eta: Option<f64>,
}

impl EstimatorSpec {
    pub fn new(kind: EstimatorKind) -> Self {
        Self { kind, eta: None }
    }

    pub fn with_eta(kind: EstimatorKind, eta: f64) -> Self {
        Self { kind, eta: Some(eta) }
    }
}

impl fmt::Display for EstimatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.eta {
            Some(eta) => write!(f, "{}@eta={eta}", self.kind.name()),
            None => f.write_str(self.kind.name()),
        }
    }
}

impl FromStr for EstimatorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, eta) = match s.split_once('@') {
            Some((kind, suffix)) => {
                let value = suffix
                    .strip_prefix("eta=")
                    .ok_or_else(|| Error::UnknownEstimator(s.to_string()))?;
                let eta: f64 = value
                    .parse()
                    .map_err(|_| Error::Config(format!("bad eta in estimator `{s}`")))?;
                (kind, Some(eta))
            }
            None => (s, None),
        };
        let kind = EstimatorKind::ALL
            .into_iter()
            .find(|k| k.name() == kind)
            .ok_or_else(|| Error::UnknownEstimator(s.to_string()))?;
        Ok(Self { kind, eta })
    }
}

impl TryFrom<String> for EstimatorSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<EstimatorSpec> for String {
    fn from(spec: EstimatorSpec) -> String {
        spec.to_string()
    }
}

/// Quantity swept along the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    N,
    D,
    Eta,
}

/// How `n` or `d` follows from the sweep value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SizeRule {
    Sweep,
    Fixed(usize),
    /// `round(factor * sweep)`.
    Scale(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovarianceKind {
    Identity,
    /// Entry `(i, j)` is `rho^|i - j|`.
    Toeplitz(f64),
    /// Spectrum `1/i^2` under a Haar rotation, redrawn per sweep point.
    LowTrace,
}

/// Held-out count of the partial estimators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeldOutRule {
    /// `ceil(c sqrt(n))`.
    SqrtN(f64),
    Fixed(usize),
}

/// Quantile level of the partial estimators, also the trimming level of
/// the trimmed-mean baseline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpsilonRule {
    /// `c / sqrt(n)`.
    SqrtN(f64),
    /// `eta + c / sqrt(n)`.
    EtaPlusSqrtN(f64),
    Fixed(f64),
}

/// Data law and estimator tuning shared by every sweep point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Design {
    pub sweep: SweepAxis,
    pub n: SizeRule,
    pub d: SizeRule,
    /// Every coordinate of the true mean.
    pub mean: f64,
    pub covariance: CovarianceKind,
    pub held_out: HeldOutRule,
    pub epsilon: EpsilonRule,
    /// Dither level of every coordinate, full setting.
    pub lambda: f64,
    pub aggregator: AggregatorId,
    /// Block fractions tried by the trimmed-mean baseline.
    pub trimmed_xis: Vec<f64>,
}

impl Default for Design {
    fn default() -> Self {
        Self {
            sweep: SweepAxis::N,
            n: SizeRule::Sweep,
            d: SizeRule::Fixed(1),
            mean: 0.0,
            covariance: CovarianceKind::Identity,
            held_out: HeldOutRule::SqrtN(1.0),
            epsilon: EpsilonRule::SqrtN(std::f64::consts::SQRT_2),
            lambda: 2.0,
            aggregator: AggregatorId::EmpiricalMean,
            trimmed_xis: vec![0.1, 0.2, 0.3, 0.4, 0.5],
        }
    }
}

/// Parameters resolved at one sweep point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub n: usize,
    pub d: usize,
    /// Corruption level before any per-estimator override.
    pub eta: f64,
}

impl Design {
    pub fn held_out(&self, n: usize) -> usize {
        match self.held_out {
            HeldOutRule::SqrtN(c) => (c * (n as f64).sqrt() - 1e-9).ceil().max(0.0) as usize,
            HeldOutRule::Fixed(k) => k,
        }
    }

    pub fn epsilon(&self, n: usize, eta: f64) -> f64 {
        match self.epsilon {
            EpsilonRule::SqrtN(c) => c / (n as f64).sqrt(),
            EpsilonRule::EtaPlusSqrtN(c) => eta + c / (n as f64).sqrt(),
            EpsilonRule::Fixed(e) => e,
        }
    }

    fn size(&self, rule: SizeRule, axis: SweepAxis, value: f64, what: &str) -> Result<usize> {
        let size = match rule {
            SizeRule::Fixed(k) => k as f64,
            SizeRule::Sweep if self.sweep == axis => value,
            SizeRule::Sweep => return Err(Error::Config(format!("{what} follows the sweep but the sweep is not over {what}"))),
            SizeRule::Scale(f) if self.sweep != SweepAxis::Eta && self.sweep != axis => (f * value).round(),
            SizeRule::Scale(_) => return Err(Error::Config(format!("{what} cannot scale with the sweep value"))),
        };
        if size.fract() != 0.0 || size < 1.0 {
            return Err(Error::Config(format!("{what} = {size} is not a positive integer")));
        }
        Ok(size as usize)
    }
}

fn default_trials() -> usize {
    100
}

fn default_scenario() -> Scenario {
    Scenario::Custom
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_scenario")]
    pub scenario: Scenario,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Sweep values, in output order.
    pub grid: Vec<f64>,
    pub estimators: Vec<EstimatorSpec>,
    /// Applied to every estimator; an `eta` sweep replaces its level.
    #[serde(default)]
    pub corruption: Option<CorruptionSpec>,
    #[serde(default)]
    pub design: Design,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Built-in experiment. `Custom` has no preset.
    pub fn preset(scenario: Scenario) -> Result<Self> {
        use EstimatorKind::*;
        let base = Design::default();
        let (grid, estimators, corruption, design) = match scenario {
            Scenario::Fig1 => (
                vec![50.0, 100.0, 200.0, 300.0, 400.0, 500.0],
                vec![EstimatorSpec::new(Partial1d), EstimatorSpec::new(SampleMean)],
                None,
                Design { mean: 100.0, ..base },
            ),
            Scenario::Fig2 => (
                (0..5).map(|k| 1200.0 + 300.0 * k as f64).collect(),
                vec![EstimatorSpec::new(PartialMulti), EstimatorSpec::new(SampleMean)],
                None,
                Design {
                    d: SizeRule::Fixed(30),
                    mean: 100.0,
                    covariance: CovarianceKind::Toeplitz(0.5),
                    held_out: HeldOutRule::SqrtN(2.0),
                    epsilon: EpsilonRule::SqrtN(3.0),
                    ..base
                },
            ),
            Scenario::Fig3 => (
                (1..=5).map(|k| 200.0 * k as f64).collect(),
                vec![EstimatorSpec::new(PartialMulti), EstimatorSpec::new(SampleMean)],
                None,
                Design {
                    d: SizeRule::Scale(0.1),
                    mean: 100.0,
                    covariance: CovarianceKind::LowTrace,
                    held_out: HeldOutRule::SqrtN(2.0),
                    epsilon: EpsilonRule::SqrtN(3.0),
                    ..base
                },
            ),
            Scenario::Fig4 => (
                (1..=40).map(|k| k as f64 / 200.0).collect(),
                vec![EstimatorSpec::new(Partial1dRobust), EstimatorSpec::new(TrimmedMean)],
                Some(CorruptionSpec::new(Stage::Pre, 0.0, Pattern::ReflectLargest)?),
                Design {
                    sweep: SweepAxis::Eta,
                    n: SizeRule::Fixed(1000),
                    mean: 100.0,
                    epsilon: EpsilonRule::EtaPlusSqrtN(1.0),
                    ..base
                },
            ),
            Scenario::Fig5 => (
                (1..=10).map(|k| 10.0 * k as f64).collect(),
                vec![EstimatorSpec::with_eta(FullMulti, 0.05), EstimatorSpec::with_eta(FullMulti, 0.1)],
                Some(CorruptionSpec::new(Stage::Pre, 0.1, Pattern::ShiftAllOnes)?),
                Design {
                    sweep: SweepAxis::D,
                    n: SizeRule::Scale(100.0),
                    d: SizeRule::Sweep,
                    lambda: 2.0,
                    ..base
                },
            ),
            Scenario::Custom => {
                return Err(Error::Config("the custom scenario needs a config file".into()));
            }
        };
        Ok(Self {
            scenario,
            trials: default_trials(),
            seed: 0,
            grid,
            estimators,
            corruption,
            design,
            output: None,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.grid.is_empty() {
            return Err(Error::Config("grid is empty".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::Config("no estimators listed".into()));
        }
        if let Some(c) = &self.corruption {
            c.validate()?;
        }
        if self.design.sweep == SweepAxis::Eta && self.corruption.is_none() {
            return Err(Error::Config("an eta sweep needs a corruption pattern".into()));
        }
        for spec in &self.estimators {
            if let Some(eta) = spec.eta {
                if self.corruption.is_none() {
                    return Err(Error::Config(format!("`{spec}` sets eta but no corruption is configured")));
                }
                if !(0.0..0.5).contains(&eta) {
                    return Err(Error::param("eta", format!("must lie in [0, 1/2), got {eta}")));
                }
            }
        }
        if !(self.design.lambda > 0.0 && self.design.lambda.is_finite()) {
            return Err(Error::param("lambda", format!("must be positive, got {}", self.design.lambda)));
        }
        if !self.design.mean.is_finite() {
            return Err(Error::param("mean", "must be finite"));
        }
        if self.design.trimmed_xis.is_empty() {
            return Err(Error::Config("trimmed_xis is empty".into()));
        }
        for g in 0..self.grid.len() {
            self.point(g)?;
        }
        Ok(())
    }

    /// Resolves `n`, `d` and `eta` at grid index `g`.
    pub fn point(&self, g: usize) -> Result<Point> {
        let value = *self
            .grid
            .get(g)
            .ok_or_else(|| Error::Config(format!("grid index {g} out of range")))?;
        if !value.is_finite() {
            return Err(Error::Config(format!("grid value {value} is not finite")));
        }
        let design = &self.design;
        let eta = if design.sweep == SweepAxis::Eta {
            if !(0.0..0.5).contains(&value) {
                return Err(Error::param("eta", format!("must lie in [0, 1/2), got {value}")));
            }
            value
        } else {
            self.corruption.map_or(0.0, |c| c.eta)
        };
        Ok(Point {
            n: design.size(design.n, SweepAxis::N, value, "n")?,
            d: design.size(design.d, SweepAxis::D, value, "d")?,
            eta,
        })
    }
}
