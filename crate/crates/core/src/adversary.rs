//! Corruption of samples before quantization and of bits after it.
//!
//! The adversary touches at most `floor(eta * n)` rows and reports exactly
//! which rows it changed.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{BitMatrix, SampleMatrix};
use crate::rng::SeededRng;
use crate::samplers::choose_without_replacement;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Pre,
    Post,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Pre => "pre",
            Stage::Post => "post",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pattern {
    /// Univariate: the largest samples are mirrored about the true mean.
    ReflectLargest,
    /// Uniformly chosen rows are translated by the all-ones vector.
    ShiftAllOnes,
    /// Uniformly chosen bit rows are negated.
    FlipRandom,
    /// Rows holding `+1` in the target coordinate get `-1` there.
    FlipDirectional,
}

impl Pattern {
    pub const ALL: [Pattern; 4] = [
        Pattern::ReflectLargest,
        Pattern::ShiftAllOnes,
        Pattern::FlipRandom,
        Pattern::FlipDirectional,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Pattern::ReflectLargest => "reflect-largest",
            Pattern::ShiftAllOnes => "shift-all-ones",
            Pattern::FlipRandom => "flip-random",
            Pattern::FlipDirectional => "flip-directional",
        }
    }

    pub fn stage(self) -> Stage {
        match self {
            Pattern::ReflectLargest | Pattern::ShiftAllOnes => Stage::Pre,
            Pattern::FlipRandom | Pattern::FlipDirectional => Stage::Post,
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Pattern::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown corruption pattern `{s}`")))
    }
}

/// What the adversary does: stage, fraction `eta` in `[0, 1/2)` and pattern.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorruptionSpec {
    pub stage: Stage,
    pub eta: f64,
    pub pattern: Pattern,
    /// Coordinate pushed by [`Pattern::FlipDirectional`].
    #[serde(default)]
    pub target: usize,
}

impl CorruptionSpec {
    pub fn new(stage: Stage, eta: f64, pattern: Pattern) -> Result<Self> {
        let spec = Self {
            stage,
            eta,
            pattern,
            target: 0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_target(mut self, target: usize) -> Self {
        self.target = target;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.eta) {
            return Err(Error::param("eta", format!("must lie in [0, 1/2), got {}", self.eta)));
        }
        if self.pattern.stage() != self.stage {
            return Err(Error::StageMismatch {
                pattern: self.pattern.name(),
                stage: self.stage.name(),
            });
        }
        Ok(())
    }

    /// `floor(eta * n)`.
    pub fn budget(&self, n: usize) -> usize {
        budget(self.eta, n)
    }
}

pub fn budget(eta: f64, n: usize) -> usize {
    ((eta * n as f64 + 1e-9).floor().max(0.0) as usize).min(n)
}

/// Corrupted data together with the indices of the rows that were changed.
#[derive(Clone, Debug, PartialEq)]
pub struct Corrupted<M> {
    pub data: M,
    pub mask: Vec<usize>,
}

/// Corrupts samples before quantization. `true_mean` is visible to the
/// adversary (reflection is about the true mean).
pub fn corrupt_pre<T: Real>(
    sample: &SampleMatrix<T>,
    spec: &CorruptionSpec,
    true_mean: &[T],
    rng: &mut SeededRng,
) -> Result<Corrupted<SampleMatrix<T>>> {
    spec.validate()?;
    if spec.stage != Stage::Pre {
        return Err(Error::StageMismatch {
            pattern: spec.pattern.name(),
            stage: spec.stage.name(),
        });
    }
    if true_mean.len() != sample.d() {
        return Err(Error::DimensionMismatch {
            expected: sample.d(),
            got: true_mean.len(),
        });
    }
    let k = spec.budget(sample.n());
    let mut out = sample.clone();
    let mut mask = match spec.pattern {
        Pattern::ReflectLargest => {
            if sample.d() != 1 {
                return Err(Error::Shape(format!(
                    "reflect-largest is univariate, got d = {}",
                    sample.d()
                )));
            }
            let mut order: Vec<usize> = (0..sample.n()).collect();
            // largest first; equal values keep index order
            order.sort_by(|&a, &b| {
                sample
                    .get(b, 0)
                    .partial_cmp(&sample.get(a, 0))
                    .expect("finite samples")
                    .then(a.cmp(&b))
            });
            let two_mu = T::lit(2.0) * true_mean[0];
            order.truncate(k);
            for &i in &order {
                out.set_row(i, &[two_mu - sample.get(i, 0)]);
            }
            order
        }
        Pattern::ShiftAllOnes => {
            let rows = choose_without_replacement(sample.n(), k, rng)?;
            let mut shifted = vec![T::zero(); sample.d()];
            for &i in &rows {
                for (s, &x) in shifted.iter_mut().zip(sample.row(i)) {
                    *s = x + T::one();
                }
                out.set_row(i, &shifted);
            }
            rows
        }
        Pattern::FlipRandom | Pattern::FlipDirectional => unreachable!("validated stage"),
    };
    mask.sort_unstable();
    assert!(mask.len() <= k);
    Ok(Corrupted { data: out, mask })
}

/// Corrupts bits after quantization with budget `floor(eta * bits.n())`.
pub fn corrupt_post(bits: &BitMatrix, spec: &CorruptionSpec, rng: &mut SeededRng) -> Result<Corrupted<BitMatrix>> {
    corrupt_post_with_budget(bits, spec, spec.budget(bits.n()), rng)
}

/// Corrupts bits with an explicit row budget, capped at the number of rows.
///
/// Partial-quantization estimators count the budget against the full sample
/// size while only `n - n0` bit rows exist.
pub fn corrupt_post_with_budget(
    bits: &BitMatrix,
    spec: &CorruptionSpec,
    budget: usize,
    rng: &mut SeededRng,
) -> Result<Corrupted<BitMatrix>> {
    spec.validate()?;
    if spec.stage != Stage::Post {
        return Err(Error::StageMismatch {
            pattern: spec.pattern.name(),
            stage: spec.stage.name(),
        });
    }
    let k = budget.min(bits.n());
    let mut out = bits.clone();
    let mut mask = match spec.pattern {
        Pattern::FlipRandom => {
            let rows = choose_without_replacement(bits.n(), k, rng)?;
            for &i in &rows {
                out.negate_row(i);
            }
            rows
        }
        Pattern::FlipDirectional => {
            let j = spec.target;
            if j >= bits.d() {
                return Err(Error::param("target", format!("coordinate {j} out of range 0..{}", bits.d())));
            }
            let eligible: Vec<usize> = (0..bits.n()).filter(|&i| bits.get(i, j) == 1).collect();
            let picks = choose_without_replacement(eligible.len(), k.min(eligible.len()), rng)?;
            let rows: Vec<usize> = picks.into_iter().map(|p| eligible[p]).collect();
            for &i in &rows {
                out.set(i, j, -1);
            }
            rows
        }
        Pattern::ReflectLargest | Pattern::ShiftAllOnes => unreachable!("validated stage"),
    };
    mask.sort_unstable();
    assert!(mask.len() <= k);
    Ok(Corrupted { data: out, mask })
}
