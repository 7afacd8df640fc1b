//! Row-major sample and bit containers.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// `n x d` matrix of finite observations, one sample per row.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleMatrix<T> {
    data: Vec<T>,
    n: usize,
    d: usize,
}

impl<T: Real> SampleMatrix<T> {
    /// Builds a matrix from row-major storage, rejecting NaN/Inf entries.
    pub fn from_vec(n: usize, d: usize, data: Vec<T>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::Shape(format!("need n >= 1 and d >= 1, got {n}x{d}")));
        }
        if data.len() != n * d {
            return Err(Error::Shape(format!(
                "{} values cannot fill a {n}x{d} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / d,
                col: pos % d,
            });
        }
        Ok(Self { data, n, d })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let d = rows.first().map(Vec::len).ok_or(Error::Empty("no rows"))?;
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: bad.len(),
            });
        }
        Self::from_vec(rows.len(), d, rows.concat())
    }

    /// Univariate sample (`d = 1`).
    pub fn from_column(values: &[T]) -> Result<Self> {
        Self::from_vec(values.len(), 1, values.to_vec())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.d + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.data.chunks_exact(self.d)
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        self.data.iter().skip(j).step_by(self.d).copied().collect()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    /// New matrix made of the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            if i >= self.n {
                return Err(Error::param("indices", format!("row {i} out of range 0..{}", self.n)));
            }
            data.extend_from_slice(self.row(i));
        }
        Self::from_vec(indices.len(), self.d, data)
    }

    /// Every row translated by the vector `c`.
    pub fn translated(&self, c: &[T]) -> Result<Self> {
        if c.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: c.len(),
            });
        }
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(k, &v)| v + c[k % self.d])
            .collect();
        Self::from_vec(self.n, self.d, data)
    }

    pub fn column_means(&self) -> Vec<T> {
        let mut sums = vec![T::zero(); self.d];
        for row in self.rows() {
            for (s, &v) in sums.iter_mut().zip(row) {
                *s = *s + v;
            }
        }
        let n = T::from_count(self.n);
        sums.into_iter().map(|s| s / n).collect()
    }

    pub fn cast<U: Real>(&self) -> SampleMatrix<U> {
        SampleMatrix {
            data: self.data.iter().map(|v| U::lit(v.as_f64())).collect(),
            n: self.n,
            d: self.d,
        }
    }

    /// Overwrites row `i`. Values must be finite.
    pub(crate) fn set_row(&mut self, i: usize, values: &[T]) {
        assert_eq!(values.len(), self.d);
        assert!(values.iter().all(|v| v.is_finite()), "non-finite row write");
        self.data[i * self.d..(i + 1) * self.d].copy_from_slice(values);
    }
}

/// `sign` with the convention `sign(0) = +1`.
#[inline]
pub fn sign<T: Real>(x: T) -> i8 {
    if x < T::zero() {
        -1
    } else {
        1
    }
}

/// `n x d` matrix with entries in `{-1, +1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMatrix {
    bits: Vec<i8>,
    n: usize,
    d: usize,
}

impl BitMatrix {
    pub fn from_vec(n: usize, d: usize, bits: Vec<i8>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::Shape(format!("need n >= 1 and d >= 1, got {n}x{d}")));
        }
        if bits.len() != n * d {
            return Err(Error::Shape(format!(
                "{} bits cannot fill a {n}x{d} matrix",
                bits.len()
            )));
        }
        if let Some(bad) = bits.iter().find(|&&b| b != 1 && b != -1) {
            return Err(Error::param("bits", format!("entry {bad} is not +-1")));
        }
        Ok(Self { bits, n, d })
    }

    /// Constant matrix filled with `bit`.
    pub fn filled(n: usize, d: usize, bit: i8) -> Result<Self> {
        Self::from_vec(n, d, vec![bit; n * d])
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.bits[i * self.d + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[i8] {
        &self.bits[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[i8]> + '_ {
        self.bits.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.bits
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, bit: i8) {
        debug_assert!(bit == 1 || bit == -1);
        self.bits[i * self.d + j] = bit;
    }

    pub(crate) fn negate_row(&mut self, i: usize) {
        for b in &mut self.bits[i * self.d..(i + 1) * self.d] {
            *b = -*b;
        }
    }

    /// Per-column sums of the bits (exact integers).
    pub fn column_sums(&self) -> Vec<i64> {
        let mut sums = vec![0i64; self.d];
        for row in self.rows() {
            for (s, &b) in sums.iter_mut().zip(row) {
                *s += i64::from(b);
            }
        }
        sums
    }

    /// Rows scaled coordinatewise: row `i` becomes `Diag(scale) * bits_i`.
    pub fn scaled<T: Real>(&self, scale: &[T]) -> Result<SampleMatrix<T>> {
        if scale.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: scale.len(),
            });
        }
        let data = self
            .bits
            .iter()
            .enumerate()
            .map(|(k, &b)| {
                let s = scale[k % self.d];
                if b > 0 {
                    s
                } else {
                    -s
                }
            })
            .collect();
        SampleMatrix::from_vec(self.n, self.d, data)
    }
}
