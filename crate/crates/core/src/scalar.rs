//! Floating-point scalar abstraction: the numerical core is generic over
//! `f32`/`f64` via `num-traits`; concrete aliases live at the crate root.

use num_traits::{Float, FromPrimitive, NumAssignOps};
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

/// Real scalar type driving every numerical routine in this crate.
pub trait Scalar:
    Float
    + FromPrimitive
    + NumAssignOps
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + serde::Serialize
    + serde::de::DeserializeOwned
    + 'static
{
    /// Convert an `f64` constant; panics only if the type cannot represent
    /// any finite `f64`, which holds for neither `f32` nor `f64`.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 constant")
    }

    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).expect("scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Complex number over a [`Scalar`].
pub type C<S> = num_complex::Complex<S>;

/// Two times pi, used by the propagators to turn linear-frequency MHz
/// Hamiltonians into angular phases (time in microseconds).
pub fn two_pi<S: Scalar>() -> S {
    S::of(std::f64::consts::TAU)
}
