//! Scalar backends for the construction algebra.
//!
//! Every decomposition in this crate is closed under field operations, so
//! the whole pipeline is generic over a [`Value`]: exact rationals for
//! verification-grade runs, `f64` where a tolerance is declared. Exactness
//! is a type-level property; operations that need a tolerance take it as an
//! explicit argument with [`Value::default_tolerance`] as the conventional
//! default (zero for rationals, `1e-12` for floats).

use alloc::string::{String, ToString};
use core::fmt::{Debug, Display};
use core::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{Float, One, Signed, ToPrimitive, Zero};

/// Exact rational scalar.
pub type Exact = Ratio<BigInt>;

/// Field scalar the constructions run over.
pub trait Value:
    Clone
    + PartialOrd
    + PartialEq
    + Debug
    + Display
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    /// Whether arithmetic in this backend is exact.
    const EXACT: bool;

    /// The scalar `num / den`. Panics if `den == 0`.
    fn ratio(num: i64, den: u64) -> Self;

    /// `2^-k`.
    fn pow2_neg(k: u32) -> Self {
        let mut v = Self::one();
        let half = Self::ratio(1, 2);
        for _ in 0..k {
            v = v * half.clone();
        }
        v
    }

    fn from_usize(n: usize) -> Self;

    /// Conversion from a float; exact backends take the float's exact
    /// dyadic value.
    fn from_f64_lossy(v: f64) -> Self;

    /// Conversion from an exact rational (lossless for exact backends).
    fn from_exact(r: &Exact) -> Self;

    fn abs(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn to_f64(&self) -> f64;

    /// Conventional comparison slack: zero in exact mode, `1e-12` for floats.
    fn default_tolerance() -> Self;

    /// Render for file formats: `"p/q"` for rationals, decimal for floats.
    fn render(&self) -> String;
}

impl Value for Exact {
    const EXACT: bool = true;

    fn ratio(num: i64, den: u64) -> Self {
        Ratio::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_usize(n: usize) -> Self {
        Ratio::from_integer(BigInt::from(n))
    }

    fn from_f64_lossy(v: f64) -> Self {
        Ratio::from_float(v).unwrap_or_else(Self::zero)
    }

    fn from_exact(r: &Exact) -> Self {
        r.clone()
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn default_tolerance() -> Self {
        Self::zero()
    }

    fn render(&self) -> String {
        if self.is_integer() {
            self.numer().to_string()
        } else {
            self.to_string()
        }
    }
}

impl Value for f64 {
    const EXACT: bool = false;

    fn ratio(num: i64, den: u64) -> Self {
        num as f64 / den as f64
    }

    fn from_usize(n: usize) -> Self {
        n as f64
    }

    fn from_f64_lossy(v: f64) -> Self {
        v
    }

    fn from_exact(r: &Exact) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn default_tolerance() -> Self {
        1e-12
    }

    fn render(&self) -> String {
        let mut s = alloc::format!("{self:?}");
        // `{:?}` keeps round-trip precision but prints "1.0" for integers;
        // trim nothing further, the form is already unambiguous.
        if s == "-0.0" {
            s = "0.0".to_string();
        }
        s
    }
}

/// Natural logarithm, usable from `no_std` through libm.
pub fn ln_f64(x: f64) -> f64 {
    Float::ln(x)
}

/// `exp(x) - 1`, usable from `no_std` through libm.
pub fn exp_m1_f64(x: f64) -> f64 {
    Float::exp_m1(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    #[test]
    fn ratio_and_pow2() {
        let h: Exact = Value::ratio(1, 2);
        assert_eq!(h.clone() + h.clone(), Exact::one());
        assert_eq!(<Exact as Value>::pow2_neg(3), Value::ratio(1, 8));
        assert_eq!(<f64 as Value>::pow2_neg(3), 0.125);
    }

    #[test]
    fn rendering() {
        let q: Exact = Value::ratio(9, 10);
        assert_eq!(q.render(), "9/10");
        let one: Exact = Value::ratio(2, 2);
        assert_eq!(one.render(), "1");
        assert_eq!(0.9f64.render(), "0.9");
    }
}
