//! Scalar abstraction shared by every solver.
//!
//! All grids, fields, matrices and solvers are generic over [`Real`], which is
//! implemented for `f32` and `f64`. Concrete `f64` aliases live at the crate
//! root.

use std::fmt::{Debug, Display};
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating-point scalar type usable for fields, matrices and solvers.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` constant into the working scalar type.
///
/// Panics if the value is not representable, which cannot happen for the
/// finite literals used throughout this crate.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("finite f64 constant must convert")
}

/// Converts a count into the working scalar type.
#[inline]
pub fn real_from_usize<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("usize count must convert")
}

/// Positive part `x⁺ = max{x, 0}`.
#[inline]
pub fn positive_part<T: Real>(x: T) -> T {
    if x > T::zero() {
        x
    } else {
        T::zero()
    }
}

/// Negative part `x⁻ = min{x, 0}`, so that `x⁺ + x⁻ = x`.
#[inline]
pub fn negative_part<T: Real>(x: T) -> T {
    if x < T::zero() {
        x
    } else {
        T::zero()
    }
}
