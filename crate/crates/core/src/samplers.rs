//! Data-generating laws and randomization utilities.
//!
//! Sampling and covariance algebra run in `f64`; callers that want another
//! scalar type cast the resulting [`SampleMatrix`].

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::SampleMatrix;
use crate::quantiles::Marginal;
use crate::rng::SeededRng;

/// Covariance structure of a Gaussian law.
#[derive(Clone, Debug, PartialEq)]
pub enum CovarianceSpec {
    Identity { d: usize },
    /// Entry `(i, j)` is `rho^|i - j|`.
    Toeplitz { d: usize, rho: f64 },
    /// `O^T Diag(spectrum) O` with `O` drawn from the Haar measure.
    HaarDiagonal { spectrum: Vec<f64> },
    Explicit(DMatrix<f64>),
}

impl CovarianceSpec {
    pub fn dim(&self) -> usize {
        match self {
            CovarianceSpec::Identity { d } | CovarianceSpec::Toeplitz { d, .. } => *d,
            CovarianceSpec::HaarDiagonal { spectrum } => spectrum.len(),
            CovarianceSpec::Explicit(m) => m.nrows(),
        }
    }

    /// Trace; rotation invariant, so known without realizing the matrix.
    pub fn trace(&self) -> f64 {
        match self {
            CovarianceSpec::Identity { d } | CovarianceSpec::Toeplitz { d, .. } => *d as f64,
            CovarianceSpec::HaarDiagonal { spectrum } => spectrum.iter().sum(),
            CovarianceSpec::Explicit(m) => m.trace(),
        }
    }

    /// Dense matrix. `rng` is consumed only by the Haar-rotated kind.
    pub fn matrix(&self, rng: &mut SeededRng) -> DMatrix<f64> {
        match self {
            CovarianceSpec::Identity { d } => DMatrix::identity(*d, *d),
            CovarianceSpec::Toeplitz { d, rho } => {
                DMatrix::from_fn(*d, *d, |i, j| rho.powi(i.abs_diff(j) as i32))
            }
            CovarianceSpec::HaarDiagonal { spectrum } => {
                let o = haar_orthogonal(spectrum.len(), rng);
                let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(spectrum));
                let m = o.transpose() * diag * &o;
                // symmetrize away rounding asymmetry
                (&m + m.transpose()) * 0.5
            }
            CovarianceSpec::Explicit(m) => m.clone(),
        }
    }
}

/// Spectrum `1, 1/4, 1/9, ..., 1/d^2` under a Haar rotation.
pub fn low_trace_cov(d: usize) -> Result<CovarianceSpec> {
    if d == 0 {
        return Err(Error::param("d", "dimension must be at least 1"));
    }
    Ok(CovarianceSpec::HaarDiagonal {
        spectrum: (1..=d).map(|i| 1.0 / (i as f64 * i as f64)).collect(),
    })
}

/// Supported data laws.
#[derive(Clone, Debug, PartialEq)]
pub enum DistributionSpec {
    Gaussian { mean: Vec<f64>, cov: CovarianceSpec },
    /// Univariate: `b` w.p. `eps`, `a` and `-a` w.p. `(1 - eps)/2` each.
    ThreePoint { a: f64, b: f64, eps: f64 },
}

impl DistributionSpec {
    pub fn dim(&self) -> usize {
        match self {
            DistributionSpec::Gaussian { mean, .. } => mean.len(),
            DistributionSpec::ThreePoint { .. } => 1,
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        match self {
            DistributionSpec::Gaussian { mean, .. } => mean.clone(),
            DistributionSpec::ThreePoint { b, eps, .. } => vec![b * eps],
        }
    }

    /// Law of coordinate `j`. Haar-rotated covariances have a random
    /// diagonal and are only supported once made explicit.
    pub fn marginal(&self, j: usize) -> Result<Marginal> {
        if j >= self.dim() {
            return Err(Error::param("coordinate", format!("{j} out of range 0..{}", self.dim())));
        }
        match self {
            DistributionSpec::Gaussian { mean, cov } => {
                let var = match cov {
                    CovarianceSpec::Identity { .. } | CovarianceSpec::Toeplitz { .. } => 1.0,
                    CovarianceSpec::Explicit(m) => m[(j, j)],
                    CovarianceSpec::HaarDiagonal { .. } => {
                        return Err(Error::UnsupportedDistribution(
                            "marginal of an unrealized Haar-rotated covariance".into(),
                        ))
                    }
                };
                Ok(Marginal::Gaussian {
                    mean: mean[j],
                    sd: var.max(0.0).sqrt(),
                })
            }
            DistributionSpec::ThreePoint { a, b, eps } => Ok(Marginal::three_point(*a, *b, *eps)),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            DistributionSpec::Gaussian { mean, cov } => {
                if mean.is_empty() {
                    return Err(Error::Empty("mean vector"));
                }
                if cov.dim() != mean.len() {
                    return Err(Error::DimensionMismatch {
                        expected: mean.len(),
                        got: cov.dim(),
                    });
                }
                Ok(())
            }
            DistributionSpec::ThreePoint { eps, .. } => {
                if !(0.0..=1.0).contains(eps) {
                    return Err(Error::param("eps", format!("mass must lie in [0, 1], got {eps}")));
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug)]
enum Factor {
    Identity,
    /// Row-major `L` with `L L^T = cov`.
    Dense(Vec<f64>),
}

/// Gaussian law `N(mean, L L^T)` with a precomputed factor.
#[derive(Clone, Debug)]
pub struct GaussianSampler {
    mean: Vec<f64>,
    factor: Factor,
}

const SYMMETRY_TOL: f64 = 1e-10;

impl GaussianSampler {
    pub fn new(mean: Vec<f64>, cov: &DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: cov.nrows(),
            });
        }
        if cov == &DMatrix::identity(d, d) {
            return Ok(Self {
                mean,
                factor: Factor::Identity,
            });
        }
        let l = symmetric_factor(cov)?;
        let dense = (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| l[(i, j)]).collect();
        Ok(Self {
            mean,
            factor: Factor::Dense(dense),
        })
    }

    pub fn standard(d: usize) -> Self {
        Self {
            mean: vec![0.0; d],
            factor: Factor::Identity,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn sample(&self, n: usize, rng: &mut SeededRng) -> Result<SampleMatrix<f64>> {
        if n == 0 {
            return Err(Error::param("n", "need at least one sample"));
        }
        let d = self.dim();
        let mut data = Vec::with_capacity(n * d);
        let mut z = vec![0.0; d];
        for _ in 0..n {
            for zj in z.iter_mut() {
                *zj = rng.sample(StandardNormal);
            }
            match &self.factor {
                Factor::Identity => data.extend(self.mean.iter().zip(&z).map(|(m, zj)| m + zj)),
                Factor::Dense(l) => {
                    for i in 0..d {
                        let li = &l[i * d..(i + 1) * d];
                        let dot: f64 = li.iter().zip(&z).map(|(a, b)| a * b).sum();
                        data.push(self.mean[i] + dot);
                    }
                }
            }
        }
        SampleMatrix::from_vec(n, d, data)
    }
}

/// `L` with `L L^T = cov`: Cholesky when positive definite, otherwise an
/// eigen-factor with eigenvalues clipped at zero (semidefinite inputs).
pub fn symmetric_factor(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = cov.nrows();
    if cov.ncols() != d {
        return Err(Error::Shape("covariance must be square".into()));
    }
    if cov.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveSemidefinite);
    }
    let scale = cov.diagonal().iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if (cov - cov.transpose()).amax() > SYMMETRY_TOL * scale {
        return Err(Error::NotPositiveSemidefinite);
    }
    if let Some(ch) = nalgebra::Cholesky::new(cov.clone()) {
        return Ok(ch.l());
    }
    let eig = nalgebra::SymmetricEigen::new(cov.clone());
    if eig.eigenvalues.iter().any(|&ev| ev < -SYMMETRY_TOL * scale) {
        return Err(Error::NotPositiveSemidefinite);
    }
    let roots = eig.eigenvalues.map(|ev| ev.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots))
}

/// `n` i.i.d. rows of `dist`. Haar-rotated covariances draw their rotation
/// from a fork of `rng`.
pub fn sample(dist: &DistributionSpec, n: usize, rng: &mut SeededRng) -> Result<SampleMatrix<f64>> {
    dist.validate()?;
    if n == 0 {
        return Err(Error::param("n", "need at least one sample"));
    }
    match dist {
        DistributionSpec::Gaussian { mean, cov } => {
            let matrix = cov.matrix(&mut rng.fork(&[0xC0FA]));
            GaussianSampler::new(mean.clone(), &matrix)?.sample(n, rng)
        }
        DistributionSpec::ThreePoint { a, b, eps } => {
            let values: Vec<f64> = (0..n)
                .map(|_| {
                    let u: f64 = rng.random();
                    if u < *eps {
                        *b
                    } else if u < *eps + (1.0 - eps) / 2.0 {
                        *a
                    } else {
                        -*a
                    }
                })
                .collect();
            SampleMatrix::from_column(&values)
        }
    }
}

/// Haar-distributed orthogonal matrix: QR of a standard Gaussian matrix with
/// the columns of `Q` rescaled so that `R` has a positive diagonal
/// (`sign(0) = +1`).
pub fn haar_orthogonal(d: usize, rng: &mut SeededRng) -> DMatrix<f64> {
    assert!(d >= 1, "dimension must be at least 1");
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Uniformly random `n0`-subset of `0..n` (in draw order).
pub fn choose_without_replacement(n: usize, n0: usize, rng: &mut SeededRng) -> Result<Vec<usize>> {
    if n0 > n {
        return Err(Error::param("n0", format!("cannot choose {n0} of {n}")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let (chosen, _) = idx.partial_shuffle(rng, n0);
    Ok(chosen.to_vec())
}
