//! Scalar types the engine and network code are generic over.
//!
//! Three backends are provided: `f32`, `f64` and [`Rational`] (exact, arbitrary
//! precision). The exact backend has no transcendental functions, so `exp` and
//! `ln` return `None` for it.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::Error;

/// Exact rational number used for constants, costs and exact evaluation.
pub type Rational = BigRational;

pub trait Scalar: Clone + Debug + Display + PartialOrd + Signed + Send + Sync + 'static {
    /// `true` when arithmetic is exact (no rounding).
    const EXACT: bool;

    fn from_rational(q: &Rational) -> Self;

    fn as_f64(&self) -> f64;

    fn exp(&self) -> Option<Self>;

    /// Natural logarithm; callers check the domain (`self > 0`) beforehand.
    fn ln(&self) -> Option<Self>;

    fn from_i64(v: i64) -> Self {
        Self::from_rational(&Rational::from_integer(BigInt::from(v)))
    }

    /// Strictly greater than zero. Unlike `Signed::is_positive`, `+0.0` is not positive.
    fn gt_zero(&self) -> bool {
        *self > Self::zero()
    }

    /// Strictly less than zero (`-0.0` is not negative).
    fn lt_zero(&self) -> bool {
        *self < Self::zero()
    }

    /// `-1`, `0` or `1`.
    fn sign(&self) -> Self {
        if self.gt_zero() {
            Self::one()
        } else if self.lt_zero() {
            -Self::one()
        } else {
            Self::zero()
        }
    }

    fn relu(&self) -> Self {
        if self.gt_zero() {
            self.clone()
        } else {
            Self::zero()
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_rational(q: &Rational) -> Self {
        ToPrimitive::to_f64(q).unwrap_or(f64::NAN)
    }

    fn as_f64(&self) -> f64 {
        *self
    }

    fn exp(&self) -> Option<Self> {
        Some(f64::exp(*self))
    }

    fn ln(&self) -> Option<Self> {
        Some(f64::ln(*self))
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn from_rational(q: &Rational) -> Self {
        q.to_f32().unwrap_or(f32::NAN)
    }

    fn as_f64(&self) -> f64 {
        *self as f64
    }

    fn exp(&self) -> Option<Self> {
        Some(f32::exp(*self))
    }

    fn ln(&self) -> Option<Self> {
        Some(f32::ln(*self))
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_rational(q: &Rational) -> Self {
        q.clone()
    }

    fn as_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn exp(&self) -> Option<Self> {
        None
    }

    fn ln(&self) -> Option<Self> {
        None
    }
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"3/7"`, `"-2"`, `"0.125"` or `"1e-3"` into an exact rational.
/// Decimal literals are read exactly, not through a binary float.
pub fn parse_rational(text: &str) -> Result<Rational, Error> {
    let s = text.trim();
    let bad = || Error::Parse(format!("not a number: {text:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((num, den)) = s.split_once('/') {
        let n = BigInt::from_str(num.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(den.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i64 = s[pos + 1..].parse().map_err(|_| bad())?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut value = Rational::from_integer(BigInt::from_str(&all_digits).map_err(|_| bad())?);
    let scale = exponent - frac_part.len() as i64;
    if scale.unsigned_abs() > 4096 {
        return Err(bad());
    }
    let ten = Rational::from_integer(BigInt::from(10));
    let factor = num_traits::pow(ten, scale.unsigned_abs() as usize);
    if scale >= 0 {
        value *= factor;
    } else {
        value /= factor;
    }
    Ok(if negative { -value } else { value })
}

/// Canonical text form: `"7"` for integers, `"-3/4"` otherwise.
pub fn format_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// JSON encoding of a rational: a number when integral and small, a string otherwise.
pub fn rational_to_json(q: &Rational) -> serde_json::Value {
    if q.is_integer() {
        if let Some(v) = q.numer().to_i64() {
            return serde_json::Value::from(v);
        }
    }
    serde_json::Value::String(format_rational(q))
}

pub fn rational_from_json(v: &serde_json::Value) -> Result<Rational, Error> {
    match v {
        serde_json::Value::Number(n) => parse_rational(&n.to_string()),
        serde_json::Value::String(s) => parse_rational(s),
        other => Err(Error::Parse(format!("expected a number, got {other}"))),
    }
}

/// Exact rational of a finite binary float.
pub fn rational_from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

pub fn is_unit_interval(q: &Rational) -> bool {
    !q.is_negative() && q <= &Rational::one()
}
