use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type the network, feasibility and enumeration code is written against.
///
/// Implemented for `f32` and `f64`. Tolerances are stated in `f64` and converted on use;
/// the defaults below are what the engine falls back to when no explicit options are given.
pub trait Scalar:
    Float
    + FromPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Smallest pivot magnitude the simplex accepts.
    const PIVOT_TOL: f64;
    /// Largest phase-one objective still treated as feasible.
    const FEAS_TOL: f64;

    /// Lossy conversion from `f64`; every finite `f64` maps to some value.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 converts to every Scalar")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    const PIVOT_TOL: f64 = 1e-9;
    const FEAS_TOL: f64 = 1e-7;
}

impl Scalar for f32 {
    const PIVOT_TOL: f64 = 1e-5;
    const FEAS_TOL: f64 = 1e-4;
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}
