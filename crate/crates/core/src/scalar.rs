//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` constant into this scalar type.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant representable in scalar type")
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + Sum
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + 'static
{
}

/// Squared Euclidean distance between two equal-length slices.
///
/// Four independent accumulators keep the loop throughput-bound; the
/// summation order is fixed, so results are reproducible bit for bit.
#[inline]
pub fn sq_dist<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [T::zero(); 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = c * 4;
        for lane in 0..4 {
            let d = a[i + lane] - b[i + lane];
            acc[lane] += d * d;
        }
    }
    let mut tail = T::zero();
    for i in chunks * 4..a.len() {
        let d = a[i] - b[i];
        tail += d * d;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Dot product with the same fixed summation order as [`sq_dist`].
#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [T::zero(); 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = c * 4;
        for lane in 0..4 {
            acc[lane] += a[i + lane] * b[i + lane];
        }
    }
    let mut tail = T::zero();
    for i in chunks * 4..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y += alpha * x`
#[inline]
pub fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
