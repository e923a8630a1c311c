//! Numeric traits the physics is written against.
//!
//! Two tiers: [`Scalar`] only needs field arithmetic and ordering, so the
//! photon-number polynomials of the attenuation and amplification models can be
//! evaluated exactly over rationals. [`Real`] adds the transcendental functions
//! needed everywhere else and is implemented for `f32` and `f64`.

use std::fmt::Debug;

use num_traits::{Float, FloatConst, FromPrimitive, Num};

/// Field arithmetic with a total-enough order. Implemented by `f32`, `f64`
/// and `num_rational::Ratio<_>`.
pub trait Scalar: Num + Copy + PartialOrd + Debug {
    #[inline]
    fn two() -> Self {
        Self::one() + Self::one()
    }

    #[inline]
    fn is_negative(self) -> bool {
        self < Self::zero()
    }
}

impl<T> Scalar for T where T: Num + Copy + PartialOrd + Debug {}

/// Floating point scalar: f32 or f64.
pub trait Real: Scalar + Float + FloatConst + FromPrimitive + Send + Sync + 'static {
    /// Lossy conversion of an f64 literal or constant.
    #[inline]
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable in scalar type")
    }

    #[inline]
    fn half() -> Self {
        Self::c(0.5)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
