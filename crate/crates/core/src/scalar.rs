use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumCast};

/// Real scalar the numerical kernels are generic over: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + NumCast + Debug + Display + Send + Sync + 'static
{
    /// Converts from `f64`, rounding to the nearest representable value.
    fn of(x: f64) -> Self {
        <Self as NumCast>::from(x).expect("f64 converts to every Scalar")
    }

    /// Converts a count to the scalar type.
    fn of_usize(n: usize) -> Self {
        <Self as NumCast>::from(n).expect("usize converts to every Scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        <f64 as NumCast>::from(self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Natural log of `n!`, summed term by term in the target precision.
pub(crate) fn ln_factorial<T: Scalar>(n: u64) -> T {
    (2..=n).fold(T::zero(), |acc, i| acc + <T as NumCast>::from(i).unwrap().ln())
}
