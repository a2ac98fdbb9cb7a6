//! Scalar fields used for step-function values and operator multipliers.
//!
//! Two implementations ship: `f64` for numerical work and [`Rational`]
//! (arbitrary precision) for identities that must hold with zero tolerance.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

/// Exact rational numbers.
pub type Rational = BigRational;

pub trait Scalar: Clone + Debug + PartialEq + PartialOrd + Send + Sync + Signed + 'static {
    fn from_rational(q: &Rational) -> Self;
    fn to_f64(&self) -> f64;
    /// Exact rational value, if the scalar has one.
    fn to_rational(&self) -> Option<Rational>;
    /// `base^(num/den)` when it is representable in this field.
    fn rational_power(base: &Rational, num: i64, den: u64) -> Option<Self>;
    /// Whether arithmetic in this field is exact.
    fn is_exact() -> bool;
    /// Parses a decimal or `p/q` literal.
    fn parse_scalar(s: &str) -> crate::error::Result<Self>;
}

impl Scalar for f64 {
    fn from_rational(q: &Rational) -> Self {
        rational_to_f64(q)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn to_rational(&self) -> Option<Rational> {
        Rational::from_f64(*self)
    }

    fn rational_power(base: &Rational, num: i64, den: u64) -> Option<Self> {
        Some(rational_to_f64(base).powf(num as f64 / den as f64))
    }

    fn is_exact() -> bool {
        false
    }

    fn parse_scalar(s: &str) -> crate::error::Result<Self> {
        if s.contains('/') {
            return Ok(rational_to_f64(&crate::grid::parse_rational(s)?));
        }
        s.trim()
            .parse()
            .map_err(|_| crate::error::Error::Parse(format!("not a number: {s:?}")))
    }
}

impl Scalar for Rational {
    fn from_rational(q: &Rational) -> Self {
        q.clone()
    }

    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }

    fn to_rational(&self) -> Option<Rational> {
        Some(self.clone())
    }

    fn rational_power(base: &Rational, num: i64, den: u64) -> Option<Self> {
        let root = exact_root(base, den)?;
        Some(pow_signed(&root, num))
    }

    fn is_exact() -> bool {
        true
    }

    fn parse_scalar(s: &str) -> crate::error::Result<Self> {
        crate::grid::parse_rational(s)
    }
}

/// Conversion that does not overflow for large numerators/denominators.
pub fn rational_to_f64(q: &Rational) -> f64 {
    if let (Some(n), Some(d)) = (q.numer().to_f64(), q.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    // Shift both parts down to the f64 range.
    let nb = q.numer().bits() as i64;
    let db = q.denom().bits() as i64;
    let shift_n = (nb - 60).max(0) as usize;
    let shift_d = (db - 60).max(0) as usize;
    let n = (q.numer() >> shift_n).to_f64().unwrap_or(0.0);
    let d = (q.denom() >> shift_d).to_f64().unwrap_or(1.0);
    n / d * 2f64.powi((shift_n as i64 - shift_d as i64) as i32)
}

pub fn rational(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `q^k` for a signed exponent.
pub fn pow_signed(q: &Rational, k: i64) -> Rational {
    if k == 0 {
        return Rational::one();
    }
    let mut acc = Rational::one();
    for _ in 0..k.unsigned_abs() {
        acc *= q;
    }
    if k < 0 {
        acc.recip()
    } else {
        acc
    }
}

/// Exact `k`-th root of a nonnegative rational, if it exists.
pub fn exact_root(q: &Rational, k: u64) -> Option<Rational> {
    if k == 0 || q.is_negative() {
        return None;
    }
    if k == 1 || q.is_zero() {
        return Some(q.clone());
    }
    let k32 = u32::try_from(k).ok()?;
    let n = q.numer().nth_root(k32);
    let d = q.denom().nth_root(k32);
    let candidate = Rational::new(n, d);
    if pow_signed(&candidate, k as i64) == *q {
        Some(candidate)
    } else {
        None
    }
}

/// Small-height rational approximation `num/den` of an exponent, if `x`
/// equals such a fraction exactly as an `f64`.
pub fn small_fraction(x: f64) -> Option<(i64, u64)> {
    if !x.is_finite() {
        return None;
    }
    for den in 1u64..=64 {
        let num = (x * den as f64).round();
        if (num / den as f64) == x && num.abs() < 1e6 {
            let g = num_integer::gcd(num as i64, den as i64).max(1);
            return Some((num as i64 / g, den / g as u64));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_roots() {
        assert_eq!(exact_root(&rational(9, 4), 2), Some(rational(3, 2)));
        assert_eq!(exact_root(&rational(2, 1), 2), None);
        assert_eq!(exact_root(&rational(1, 16), 4), Some(rational(1, 2)));
    }

    #[test]
    fn rational_power_of_weight() {
        // w^{-1/2} for w = 4 is exactly 1/2.
        let r = <Rational as Scalar>::rational_power(&int(4), -1, 2).unwrap();
        assert_eq!(r, rational(1, 2));
        assert!(<Rational as Scalar>::rational_power(&rational(2, 3), -1, 2).is_none());
        let f = <f64 as Scalar>::rational_power(&rational(2, 3), -1, 2).unwrap();
        assert!((f - (1.5f64).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn fractions() {
        assert_eq!(small_fraction(1.5), Some((3, 2)));
        assert_eq!(small_fraction(0.25), Some((1, 4)));
        assert_eq!(small_fraction(4.0), Some((4, 1)));
        assert_eq!(small_fraction(std::f64::consts::PI), None);
    }

    #[test]
    fn huge_rationals_convert() {
        let big = Rational::new(BigInt::from(3) << 2000usize, BigInt::from(1) << 2001usize);
        assert!((rational_to_f64(&big) - 1.5).abs() < 1e-15);
    }
}
