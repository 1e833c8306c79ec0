use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Scalar type for every computation in the crate: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + Sum
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Convert an `f64` literal. Never fails for finite input.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite literal")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Smallest tolerance that is meaningful for this precision: `tol`, but at
    /// least a few hundred ulps of `scale`.
    #[inline]
    fn tol(tol: f64, scale: Self) -> Self {
        let floor = Self::epsilon() * Self::lit(256.0) * scale.abs().max(Self::one());
        Self::lit(tol).max(floor)
    }
}

impl Real for f32 {}
impl Real for f64 {}
