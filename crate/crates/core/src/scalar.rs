//! Scalar abstractions.
//!
//! Floating point kernels are written against [`Real`] so they run in `f32`
//! and `f64`. Determinant expressions that must also be evaluated exactly
//! (for instance with arbitrary precision rationals in verification code)
//! are written against the weaker [`Ring`] bound.

use std::fmt::Debug;

use num_traits::{Float, FloatConst, FromPrimitive, Num, NumCast};

/// Floating point scalar used by the geometry kernels.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumCast + Default + Debug + Send + Sync + 'static
{
    /// Converts an `f64` literal. Panics only if the value is not representable,
    /// which cannot happen for finite literals and `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossless(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Commutative ring with an order. Enough to evaluate sign-of-determinant
/// predicates; implemented by `f64` and by exact rationals.
pub trait Ring: Clone + Num + PartialOrd + Debug {}

impl<T: Clone + Num + PartialOrd + Debug> Ring for T {}
