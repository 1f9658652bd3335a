//! Scalar abstraction for the numeric core.
//!
//! All distribution and model math is generic over [`Scalar`] so the same
//! code runs in f32 or f64. The reference tolerances in the test suites
//! assume f64; f32 is provided for cheap inference experiments.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable throughout the numeric core.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum<Self> + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy cast from f64, for constants and configuration values.
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable in scalar type")
    }

    /// Lossy cast to f64, for reporting and serialization.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("scalar representable as f64")
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + Sum<T>
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + 'static
{
}

/// Numerically stable logistic function.
pub fn sigmoid<S: Scalar>(x: S) -> S {
    if x >= S::zero() {
        S::one() / (S::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (S::one() + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_symmetry_and_extremes() {
        assert_eq!(sigmoid(0.0f64), 0.5);
        let x = 3.7f64;
        assert!((sigmoid(x) + sigmoid(-x) - 1.0).abs() < 1e-15);
        assert_eq!(sigmoid(-1000.0f64), 0.0);
        assert_eq!(sigmoid(1000.0f64), 1.0);
    }

    #[test]
    fn works_in_f32() {
        let p: f32 = sigmoid(0.25f32);
        assert!((p.to_f64_lossy() - sigmoid(0.25f64)).abs() < 1e-7);
    }
}
