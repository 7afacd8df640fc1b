//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! All estimators, quantizers and aggregators are written against [`Real`],
//! so the same code runs in `f32` or `f64`. Data generation and dense linear
//! algebra (covariance factorization, Haar rotations) always run in `f64`
//! and are cast on the way out.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// A real floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    /// Converts a count into this scalar type.
    #[inline]
    fn from_count(k: usize) -> Self {
        Self::from_usize(k).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Euclidean norm of `a - b`.
pub fn l2_distance<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<T>()
        .sqrt()
}

/// Arithmetic mean of a nonempty slice.
pub fn mean<T: Real>(values: &[T]) -> T {
    debug_assert!(!values.is_empty());
    values.iter().copied().sum::<T>() / T::from_count(values.len())
}
