//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All fields, quadrature rules, norms and weight scans are generic over a
//! [`Real`] type. `f64` is the working precision used by the CLI and the
//! tolerances quoted throughout the docs; `f32` is supported for quick,
//! low-precision exploration.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar usable by the library: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal into `Self`, rounding if needed.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    /// Lossy conversion used for diagnostics and serialization.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Converts an index or count.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Reciprocal of an extended real with `1/∞ = 0`.
pub(crate) fn recip_ext<T: Real>(v: T) -> T {
    if v.is_infinite() {
        T::zero()
    } else {
        v.recip()
    }
}

pub(crate) fn to_f64_vec<T: Real>(x: &[T]) -> Vec<f64> {
    x.iter().map(|v| v.as_f64()).collect()
}
