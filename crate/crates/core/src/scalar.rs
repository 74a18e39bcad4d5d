//! Scalar abstraction shared by every numeric routine in the crate.

use num_traits::{Float, FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

/// Floating-point element type for feature matrices, transforms and models.
///
/// Implemented for `f32` and `f64`. `Display`/`FromStr` are required so that
/// CSV export round-trips bit-exactly.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + FromStr
    + Default
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`; used for hyperparameters and RNG draws.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable in every Scalar")
    }

    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("usize is representable in every Scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Value type for count-derived metrics.
///
/// Anything closed under the field operations works, which lets metrics be
/// evaluated both in floating point and in exact rational arithmetic.
pub trait Ratio: num_traits::Num + FromPrimitive + PartialOrd + Clone + Debug {}

impl<R> Ratio for R where R: num_traits::Num + FromPrimitive + PartialOrd + Clone + Debug {}
