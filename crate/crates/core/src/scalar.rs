//! Scalar bound for the closed-form layer.

use std::fmt::Debug;

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point type usable by the analytic formulas (profiles, kernels).
pub trait Scalar: Float + FloatConst + FromPrimitive + Debug + Send + Sync + 'static {}

impl<T> Scalar for T where T: Float + FloatConst + FromPrimitive + Debug + Send + Sync + 'static {}

/// Convert an `f64` literal into `T`.
#[inline]
pub(crate) fn lit<T: Scalar>(v: f64) -> T {
    T::from_f64(v).expect("literal representable in scalar type")
}
