//! Floating-point abstraction used by every numeric routine in the crate.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar the channel model is evaluated in: `f32` or `f64`.
///
/// The closed-form phase design lives entirely in the fractional part of
/// `f_c * tau` (a few hundred thousand cycles at S-band), so `f32` is only
/// useful for coarse geometry. Use `f64` for anything phase-sensitive.
pub trait Scalar:
    'static
    + Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Default
    + Send
    + Sync
    + Debug
    + Display
    + LowerExp
{
    /// Converts an `f64` literal into `Self`.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    /// Converts a count or index into `Self`.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    fn two_pi() -> Self {
        Self::TAU()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Nonnegative remainder of `x` modulo 1, always in `[0, 1)`.
///
/// `x - floor(x)` can round up to exactly 1 for tiny negative `x`; that
/// case is folded back to 0.
pub fn unit_fract<T: Scalar>(x: T) -> T {
    let r = x - x.floor();
    if r >= T::one() {
        T::zero()
    } else {
        r
    }
}

/// Distance from `x` to the nearest integer.
pub fn distance_to_integer<T: Scalar>(x: T) -> T {
    (x - x.round()).abs()
}
