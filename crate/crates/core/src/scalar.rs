//! Scalar abstraction shared by every numeric module.
//!
//! The physics here needs `ln`, `exp` and `sinh`, so the bound is
//! [`num_traits::Float`]. Both `f32` and `f64` satisfy it; the CLI and the
//! Monte Carlo harness run in `f64`.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

/// Floating point type usable by the simulator (`f32` or `f64`).
pub trait Scalar: Float + FromPrimitive + Debug + Display + Default + Send + Sync + 'static {
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    /// Converts a count into this scalar type.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Seconds to nanoseconds.
pub(crate) fn ns_per_s<T: Scalar>() -> T {
    T::lit(1e9)
}
