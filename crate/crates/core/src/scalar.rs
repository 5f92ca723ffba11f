//! Scalar types the evaluator, mean constructions and LP solver are generic over.
//!
//! Everything that has to be replayed exactly (certificates, the ultramean
//! identity, quantifier elimination) runs over [`Rational`]. The float
//! instances exist for fast approximate sweeps; they compare with a small
//! absolute tolerance instead of exact equality.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

/// Arbitrary precision rational number.
pub type Rational = num_rational::BigRational;

/// A number type usable as truth values, distances and charge weights.
pub trait Scalar:
    Clone + fmt::Debug + fmt::Display + PartialOrd + Num + Signed + Send + Sync + 'static
{
    /// Whether arithmetic is exact. Exact types use a zero tolerance.
    const EXACT: bool;

    fn from_rational(r: &Rational) -> Self;

    fn as_f64(&self) -> f64;

    /// Absolute slack used by comparisons such as [`Scalar::le_tol`].
    fn tolerance() -> Self;

    fn from_usize(n: usize) -> Self {
        Self::from_rational(&Rational::from_integer(BigInt::from(n)))
    }

    fn pow(&self, exp: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..exp {
            acc = acc * self.clone();
        }
        acc
    }

    fn le_tol(&self, other: &Self) -> bool {
        *self <= other.clone() + Self::tolerance()
    }

    fn eq_tol(&self, other: &Self) -> bool {
        (self.clone() - other.clone()).abs() <= Self::tolerance()
    }

    fn is_positive_tol(&self) -> bool {
        *self > Self::tolerance()
    }

    fn is_negative_tol(&self) -> bool {
        *self < -Self::tolerance()
    }

    /// Decides `c^(1/p) <= a^(1/p) + b^(1/p)` for nonnegative inputs.
    fn root_triangle(a: &Self, b: &Self, c: &Self, p: u32) -> bool {
        let r = |x: &Self| x.as_f64().max(0.0).powf(1.0 / f64::from(p));
        r(c) <= r(a) + r(b) + Self::tolerance().as_f64()
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn as_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn tolerance() -> Self {
        Rational::zero()
    }

    fn le_tol(&self, other: &Self) -> bool {
        self <= other
    }

    fn eq_tol(&self, other: &Self) -> bool {
        self == other
    }

    fn is_positive_tol(&self) -> bool {
        self.is_positive()
    }

    fn is_negative_tol(&self) -> bool {
        self.is_negative()
    }

    fn root_triangle(a: &Self, b: &Self, c: &Self, p: u32) -> bool {
        root_triangle_holds(a, b, c, p)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_rational(r: &Rational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }

    fn as_f64(&self) -> f64 {
        *self
    }

    fn tolerance() -> Self {
        1e-9
    }

    fn pow(&self, exp: u32) -> Self {
        self.powi(exp as i32)
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn from_rational(r: &Rational) -> Self {
        ToPrimitive::to_f32(r).unwrap_or(f32::NAN)
    }

    fn as_f64(&self) -> f64 {
        f64::from(*self)
    }

    fn tolerance() -> Self {
        1e-4
    }

    fn pow(&self, exp: u32) -> Self {
        self.powi(exp as i32)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal {0:?} (expected \"p\" or \"p/q\")")]
pub struct RationalParseError(pub String);

/// Parses `p`, `-p` or `p/q`. Decimal notation is rejected.
pub fn parse_rational(text: &str) -> Result<Rational, RationalParseError> {
    let t = text.trim();
    let err = || RationalParseError(text.to_string());
    if t.is_empty() || t.contains('.') || t.contains('e') || t.contains('E') {
        return Err(err());
    }
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let valid_digits = |s: &str, allow_sign: bool| {
        let s = if allow_sign { s.strip_prefix('-').unwrap_or(s) } else { s };
        !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
    };
    if !valid_digits(num, true) || !valid_digits(den, false) {
        return Err(err());
    }
    let n = BigInt::from_str(num).map_err(|_| err())?;
    let d = BigInt::from_str(den).map_err(|_| err())?;
    if d.is_zero() {
        return Err(err());
    }
    Ok(Rational::new(n, d))
}

/// Canonical text form: `p` for integers, `p/q` otherwise.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Fixed-point decimal rendering used for human-facing output.
pub fn format_decimal(r: &Rational, digits: usize) -> String {
    let scale = BigInt::from(10u32).pow(digits as u32);
    let scaled = (r * Rational::from_integer(scale.clone())).round();
    let n = scaled.to_integer();
    let neg = n.is_negative();
    let n = n.abs();
    let int_part = &n / &scale;
    let frac_part = &n % &scale;
    let mut s = String::new();
    if neg && !n.is_zero() {
        s.push('-');
    }
    s.push_str(&int_part.to_string());
    if digits > 0 {
        s.push('.');
        s.push_str(&format!("{:0>width$}", frac_part.to_string(), width = digits));
    }
    s
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Exact p-th root of a nonnegative rational, if it is rational.
pub fn exact_root(r: &Rational, p: u32) -> Option<Rational> {
    if r.is_negative() {
        return None;
    }
    if p == 1 {
        return Some(r.clone());
    }
    let n = r.numer().nth_root(p);
    let d = r.denom().nth_root(p);
    if num_traits::pow(n.clone(), p as usize) == *r.numer()
        && num_traits::pow(d.clone(), p as usize) == *r.denom()
    {
        Some(Rational::new(n, d))
    } else {
        None
    }
}

/// Rational enclosure `[lo, lo + 2^-bits]` of the real p-th root of `r >= 0`.
pub fn root_bounds(r: &Rational, p: u32, bits: u32) -> (Rational, Rational) {
    let scale = BigInt::one() << bits as usize;
    // floor((num * scale^p / den)^(1/p)) / scale
    let scaled = r.numer() * num_traits::pow(scale.clone(), p as usize) / r.denom();
    let lo = scaled.nth_root(p);
    let lo = Rational::new(lo, scale.clone());
    let hi = &lo + Rational::new(BigInt::one(), scale);
    (lo, hi)
}

/// Decides `c^(1/p) <= a^(1/p) + b^(1/p)` exactly for nonnegative rationals.
///
/// Distinct real radicals of the same degree over the rationals are linearly
/// independent unless their ratios are rational, so equality can only occur
/// when `a/c` and `b/c` are both exact p-th powers. That case is settled
/// exactly; otherwise interval refinement terminates.
pub fn root_triangle_holds(a: &Rational, b: &Rational, c: &Rational, p: u32) -> bool {
    if c.is_zero() {
        return true;
    }
    if p == 1 {
        return c <= &(a + b);
    }
    if let (Some(ra), Some(rb)) = (exact_root(&(a / c), p), exact_root(&(b / c), p)) {
        return ra + rb >= Rational::one();
    }
    // Cheap necessary/sufficient checks before refinement.
    if c <= a || c <= b {
        return true;
    }
    let mut bits = 16;
    loop {
        let (alo, ahi) = root_bounds(a, p, bits);
        let (blo, bhi) = root_bounds(b, p, bits);
        let (clo, chi) = root_bounds(c, p, bits);
        if chi <= &alo + &blo {
            return true;
        }
        if clo > ahi + bhi {
            return false;
        }
        bits *= 2;
        assert!(bits <= 1 << 16, "root comparison failed to separate");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_formats() {
        assert_eq!(parse_rational("3/6").unwrap(), rat(1, 2));
        assert_eq!(parse_rational("-4").unwrap(), int(-4));
        assert_eq!(format_rational(&rat(-6, 4)), "-3/2");
        assert_eq!(format_rational(&int(7)), "7");
        assert!(parse_rational("0.5").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("1e3").is_err());
        assert!(parse_rational("--1").is_err());
        assert!(parse_rational("1/-2").is_err());
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(format_decimal(&rat(1, 3), 4), "0.3333");
        assert_eq!(format_decimal(&rat(-1, 2), 2), "-0.50");
        assert_eq!(format_decimal(&int(2), 0), "2");
    }

    #[test]
    fn roots() {
        assert_eq!(exact_root(&rat(4, 9), 2), Some(rat(2, 3)));
        assert_eq!(exact_root(&rat(1, 2), 2), None);
        let (lo, hi) = root_bounds(&int(2), 2, 20);
        assert!(lo.as_f64() <= 2f64.sqrt() && 2f64.sqrt() <= hi.as_f64());
    }

    #[test]
    fn root_triangle_cases() {
        // sqrt(2) + sqrt(2) = sqrt(8)
        assert!(root_triangle_holds(&int(2), &int(2), &int(8), 2));
        assert!(!root_triangle_holds(&int(2), &int(2), &rat(801, 100), 2));
        // 1 + 1 >= sqrt(3)
        assert!(root_triangle_holds(&int(1), &int(1), &int(3), 2));
        assert!(!root_triangle_holds(&int(1), &int(1), &int(5), 2));
        assert!(root_triangle_holds(&int(1), &int(1), &int(8), 3));
        assert!(!root_triangle_holds(&int(1), &int(1), &int(9), 3));
    }
}
