//! The floating-point abstraction every numeric routine in this crate is
//! generic over.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, NumCast};

/// Floating point: `f32` or `f64`.
///
/// Descriptors are always stored as `f32`; statistics, distances and the
/// eigensolver run in whichever `Scalar` the caller picks. The pipeline uses
/// `f64` throughout (see the aliases at the crate root).
pub trait Scalar:
    Float
    + FromPrimitive
    + NumCast
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Widen or narrow an `f64` constant.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as NumCast>::from(x).expect("f64 literal fits in scalar")
    }

    #[inline]
    fn widen(x: f32) -> Self {
        <Self as NumCast>::from(x).expect("f32 fits in scalar")
    }

    #[inline]
    fn from_count(n: u64) -> Self {
        <Self as NumCast>::from(n).expect("count fits in scalar")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        <f64 as NumCast>::from(self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Squared Euclidean distance between two `f32` descriptors, computed in `T`.
#[inline]
pub fn squared_distance_f32<T: Scalar>(a: &[f32], b: &[f32]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let diff = T::widen(x) - T::widen(y);
            diff * diff
        })
        .sum()
}
