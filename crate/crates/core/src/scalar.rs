//! Scalar abstraction shared by every numeric kernel in the crate.

use std::fmt::{Debug, Display};

use ndarray::ScalarOperand;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, NumCast};

/// Floating point scalar the kernels are written against: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumCast
    + NumAssign
    + ScalarOperand
    + ndarray::LinalgScalar
    + rustfft::FftNum
    + Default
    + Debug
    + Display
    + std::str::FromStr
    + serde::Serialize
    + serde::de::DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal or intermediate.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as NumCast>::from(x).expect("f64 is representable in every Real")
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        <Self as NumCast>::from(n).expect("usize is representable in every Real")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_round_trip() {
        assert_eq!(<f64 as Real>::lit(0.25), 0.25);
        assert_eq!(<f32 as Real>::lit(0.25), 0.25f32);
        assert_eq!(<f32 as Real>::of_usize(7).as_f64(), 7.0);
    }
}
