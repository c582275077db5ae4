//! Numeric abstraction shared by the scoring and decomposition code.
//!
//! Everything that only needs field arithmetic (Brier, Alpha, Murphy) is
//! written against [`Scalar`], so it runs on `f32`, `f64` and exact big
//! rationals alike. Routines that need square roots or transcendental
//! functions ask for [`num_traits::Float`] on top.

use std::fmt::Debug;

use num_traits::{FromPrimitive, Num, NumAssign, ToPrimitive};

/// A number type the forecast-verification routines can compute in.
pub trait Scalar:
    Clone + Debug + PartialOrd + Num + NumAssign + FromPrimitive + ToPrimitive
{
    /// `value / 10_000`, exact for rationals and for every bp value in binary64.
    fn from_bp(value: u16) -> Self {
        Self::from_u16(value).expect("u16 fits every scalar")
            / Self::from_u16(10_000).expect("10000 fits every scalar")
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar")
    }

    /// Lossy view used for reporting and for calling into `f64`-only code.
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Clone + Debug + PartialOrd + Num + NumAssign + FromPrimitive + ToPrimitive
{
}

/// Converts a binary outcome to the scalar `0` or `1`.
pub(crate) fn outcome_scalar<T: Scalar>(x: u8) -> T {
    if x == 0 {
        T::zero()
    } else {
        T::one()
    }
}

pub(crate) fn square<T: Scalar>(v: T) -> T {
    v.clone() * v
}

/// Converts an `f64` constant into a float scalar.
pub(crate) fn lit<T: num_traits::Float>(v: f64) -> T {
    T::from(v).expect("float literal representable")
}
