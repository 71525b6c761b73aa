//! Numeric abstraction shared by the geometry, network and propagation code.
//!
//! Everything that only needs field arithmetic and ordering is written against
//! [`Scalar`], so the same routines run on `f32`, `f64` and exact rationals.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, NumAssign, Signed, ToPrimitive};

/// A real-number stand-in: an ordered field with conversions from machine numbers.
pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialOrd
    + Num
    + NumAssign
    + Signed
    + FromPrimitive
    + ToPrimitive
    + Send
    + Sync
    + 'static
{
    /// Whether arithmetic on this type is exact (no rounding).
    const EXACT: bool;

    /// Absolute slack on the hull test `sum of distances <= t`.
    ///
    /// Corners sit exactly on the boundary, so inexact types need a little room.
    fn membership_slack() -> Self;

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    /// Lossy conversion from `f64`. Panics on non-finite input.
    fn from_real(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 representable in scalar type")
    }

    fn to_real(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn membership_slack() -> Self {
        1e-5
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn membership_slack() -> Self {
        1e-9
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn membership_slack() -> Self {
        BigRational::from_integer(BigInt::from(0))
    }
}

/// Kahan-compensated running sum. Degenerates to a plain sum for exact types.
#[derive(Debug, Clone)]
pub struct CompensatedSum<T> {
    sum: T,
    carry: T,
}

impl<T: Scalar> Default for CompensatedSum<T> {
    fn default() -> Self {
        Self {
            sum: T::zero(),
            carry: T::zero(),
        }
    }
}

impl<T: Scalar> CompensatedSum<T> {
    pub fn add(&mut self, x: T) {
        if T::EXACT {
            self.sum += x;
            return;
        }
        let y = x - self.carry.clone();
        let t = self.sum.clone() + y.clone();
        self.carry = (t.clone() - self.sum.clone()) - y;
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::<f64>::default();
        s.add(1.0);
        for _ in 0..10_000 {
            s.add(1e-16);
        }
        assert!((s.value() - (1.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn rational_slack_is_zero() {
        assert_eq!(
            BigRational::membership_slack(),
            BigRational::from_integer(0.into())
        );
        assert_eq!(f64::membership_slack(), 1e-9);
    }
}
