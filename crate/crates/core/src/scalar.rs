//! Floating-point abstraction shared by the numerical modules.
//!
//! Algorithms are written once against [`Real`] and monomorphised for `f32`
//! and `f64`. Physical constants and configuration stay in `f64` and are
//! brought into the working precision with [`Real::lit`].

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rustfft::FftNum;

pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + FftNum
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into the working precision.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in target float")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in target float")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Machine epsilon scaled for tolerance checks in the working precision.
    fn tolerance_floor() -> Self;
}

impl Real for f32 {
    #[inline]
    fn tolerance_floor() -> Self {
        1e-6
    }
}

impl Real for f64 {
    #[inline]
    fn tolerance_floor() -> Self {
        1e-12
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn halve<T: Real>(x: T) -> T {
        x * T::lit(0.5)
    }

    #[test]
    fn literals_round_trip_in_both_precisions() {
        assert_eq!(halve(3.0f32), 1.5f32);
        assert_eq!(halve(3.0f64), 1.5f64);
        assert_eq!(f32::from_usize_lossy(90_000), 90_000.0);
        assert_eq!(0.25f32.to_f64_lossy(), 0.25);
    }
}
