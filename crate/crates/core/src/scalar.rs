//! Scalar abstraction: everything numeric in this crate is generic over [`Real`],
//! which is implemented for `f32` and `f64`.
//!
//! The crate root exposes `f64`-backed type aliases for the common case; the
//! generic parameter exists so the whole pipeline (distributions, CE loop,
//! benchmarks) can be instantiated at `f32` when memory or throughput matters
//! more than precision.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{de::DeserializeOwned, Serialize};

/// Floating-point scalar usable throughout the crate.
///
/// Beyond the `num_traits::Float` arithmetic surface this adds:
/// conversions from/to `f64` (tolerance constants and configuration are
/// specified in `f64`), random draws, serde support, and the thread-safety
/// bounds needed to run trials in parallel.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into this scalar type.
    ///
    /// Conversion is via `FromPrimitive`; values representable in `f64` but
    /// not in `Self` round in the usual IEEE way (`f32::of(1e-60)` underflows
    /// to zero, which is the behaviour we want for tolerances).
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("f64 -> Real conversion cannot fail for float targets")
    }

    /// Returns `self` as `f64` (lossless for `f32`/`f64`).
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("Real -> f64 conversion cannot fail for float sources")
    }

    /// Draws a standard normal variate.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Draws a uniform variate in `[0, 1)`.
    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Real for f64 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }

    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random()
    }
}

impl Real for f32 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }

    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random()
    }
}
