//! Scalar abstraction for the numerical core.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating-point scalar accepted by the copula and distribution code: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

/// Converts an `f64` literal into the working scalar.
#[inline(always)]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("finite literal")
}

/// An absolute tolerance that never drops below a few ulps of the scalar type.
#[inline]
pub fn tol<T: Real>(requested: f64) -> T {
    let floor = T::epsilon() * lit(16.0);
    let t = lit::<T>(requested);
    if t > floor {
        t
    } else {
        floor
    }
}
