use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar used for rates, probabilities and times.
///
/// Implemented for `f32` and `f64`. Anything satisfying the bounds works.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal, panicking only for types that cannot
    /// represent ordinary finite values.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("scalar cannot represent f64 literal")
    }

    /// Lossy conversion back to `f64`.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Tolerance used when checking that probabilities sum to one.
    fn probability_tolerance() -> Self {
        let floor = Self::lit(1e-12);
        let ulp = Self::epsilon() * Self::lit(64.0);
        if ulp > floor {
            ulp
        } else {
            floor
        }
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + 'static
{
}
