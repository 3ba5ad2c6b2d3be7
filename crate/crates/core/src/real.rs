use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Scalar type of trainable parameters.
///
/// Training runs in `f32`; `f64` exists so gradient checks can run against
/// finite differences without drowning in rounding noise.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    fn widen_f32(v: f32) -> Self;
    fn from_f64_lossy(v: f64) -> Self;
    fn to_f32_lossy(self) -> f32;
    fn to_f64_lossless(self) -> f64;
}

impl Real for f32 {
    #[inline]
    fn widen_f32(v: f32) -> Self {
        v
    }
    #[inline]
    fn from_f64_lossy(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn to_f32_lossy(self) -> f32 {
        self
    }
    #[inline]
    fn to_f64_lossless(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    #[inline]
    fn widen_f32(v: f32) -> Self {
        v as f64
    }
    #[inline]
    fn from_f64_lossy(v: f64) -> Self {
        v
    }
    #[inline]
    fn to_f32_lossy(self) -> f32 {
        self as f32
    }
    #[inline]
    fn to_f64_lossless(self) -> f64 {
        self
    }
}
