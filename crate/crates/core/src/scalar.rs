//! Scalar abstraction shared by every numeric component.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, SubAssign};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type used for edge costs, similarities and distances: `f32` or `f64`.
///
/// Accuracy-sensitive paths (the acceptance tolerances of `1e-12`) assume `f64`;
/// `f32` is supported for memory-constrained indexes.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + Sum
    + Debug
    + Display
    + FromStr
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an integer time length into the scalar type.
    fn from_len(len: i64) -> Self {
        Self::from_i64(len).expect("interval length representable as a float")
    }

    /// Widening conversion used by serializers and reports.
    fn to_f64_lossless(self) -> f64 {
        self.to_f64().expect("float to f64")
    }

    fn from_f64_lossy(value: f64) -> Self {
        Self::from_f64(value).expect("f64 to float")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
