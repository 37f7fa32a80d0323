//! Numeric weights used by the probability routines.
//!
//! Double precision is the default; [`BigRational`] gives exact answers on
//! small inputs.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

pub trait Weight: Clone + core::fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    /// Converts an event probability. Rationals take the exact binary value.
    fn from_prob(p: f64) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    /// `1 - self`
    fn complement(&self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    /// `self / other`; callers rule out a zero divisor.
    fn div(&self, other: &Self) -> Self;
    fn to_f64(&self) -> f64;
    fn is_zero(&self) -> bool;
}

impl Weight for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_prob(p: f64) -> Self {
        p
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn complement(&self) -> Self {
        1.0 - self
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
}

impl Weight for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        <BigRational as One>::one()
    }
    /// The shortest decimal that reads back as `p`, so `0.9` becomes `9/10`.
    fn from_prob(p: f64) -> Self {
        if !p.is_finite() {
            return Zero::zero();
        }
        let text = alloc::format!("{}", abs(p));
        let (int, frac) = text.split_once('.').unwrap_or((&text, ""));
        let digits = alloc::format!("{int}{frac}");
        let num = BigInt::parse_bytes(digits.as_bytes(), 10).expect("decimal digits");
        let den = num_traits::pow(BigInt::from(10u32), frac.len());
        let r = BigRational::new(num, den);
        if p < 0.0 {
            -r
        } else {
            r
        }
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn complement(&self) -> Self {
        <BigRational as One>::one() - self
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
}

/// Relative comparison used throughout the test-suites: `|a - b| <= tol * max(1, |a|, |b|)`.
pub fn approx_eq(a: f64, b: f64, tol: f64) -> bool {
    let scale = 1.0f64.max(abs(a)).max(abs(b));
    abs(a - b) <= tol * scale
}

pub(crate) fn abs(x: f64) -> f64 {
    if x < 0.0 {
        -x
    } else {
        x
    }
}
