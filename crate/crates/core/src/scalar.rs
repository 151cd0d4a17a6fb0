//! Floating point abstraction shared by every numeric module.

use num_traits::{Float, FloatConst, FromPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Real scalar used for coordinates, fields and linear algebra.
///
/// Implemented for `f32` and `f64`. All algorithms are written against this
/// trait; the crate root exports `f64` aliases for the common types.
pub trait Real:
    Float + FloatConst + FromPrimitive + Default + Debug + Display + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Converts a count into the scalar type.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Machine-precision scaled tolerance used by geometric predicates.
    #[inline]
    fn tiny() -> Self {
        Self::epsilon() * Self::lit(64.0)
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals_round_trip() {
        assert_eq!(<f64 as Real>::lit(0.25), 0.25);
        assert_eq!(<f32 as Real>::lit(0.25), 0.25f32);
        assert_eq!(<f64 as Real>::from_count(7), 7.0);
    }
}
