//! Scalar abstraction for the numeric kernels.
//!
//! Everything downstream of the integer graph machinery (spectra, signatures,
//! distances, diversity measures, optimizer state) is generic over [`Scalar`]
//! so the same code runs in `f32` and `f64`. The crate root exports `f64`
//! aliases, which is what the CLI and the experiment suite use.

use std::fmt;
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by all numeric kernels in this crate.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum<Self>
    + fmt::Debug
    + fmt::Display
    + fmt::LowerExp
    + Send
    + Sync
    + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Shorthand for lifting an `f64` constant into a generic scalar.
#[inline]
pub fn real<S: Scalar>(x: f64) -> S {
    S::from_f64(x).expect("constant representable in scalar type")
}

/// Shorthand for lifting a `usize` count into a generic scalar.
#[inline]
pub fn count<S: Scalar>(x: usize) -> S {
    S::from_usize(x).expect("count representable in scalar type")
}
