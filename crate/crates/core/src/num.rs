//! Exact rational helpers: parsing, formatting and integer scaling.

use std::fmt::Debug;
use std::ops::{Add, Mul, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serializer};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Parses `"p/q"`, integers and plain decimals such as `"-3.25"` or `"1e-3"`.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    let bad = || Error::ParseNumber(text.to_string());
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i32 = s[pos + 1..].parse().map_err(|_| bad())?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let combined = format!("{whole}{frac}");
    let mut numer: BigInt = if combined.is_empty() {
        BigInt::zero()
    } else {
        combined.parse().map_err(|_| bad())?
    };
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac.len() as i32;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        Rational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(value)
}

/// `"p/q"`, or `"p"` for integers.
pub fn format_rational(value: &Rational) -> String {
    if value.is_integer() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Rounded decimal rendering with a fixed number of fractional digits.
pub fn format_decimal(value: &Rational, digits: usize) -> String {
    let scale = num_traits::pow(BigInt::from(10), digits);
    let scaled = value * Rational::from_integer(scale.clone());
    let rounded = scaled.round().to_integer();
    let negative = rounded.is_negative();
    let abs = rounded.abs();
    let (whole, frac) = abs.div_rem(&scale);
    let sign = if negative { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{whole}")
    } else {
        format!("{sign}{whole}.{:0>width$}", frac.to_string(), width = digits)
    }
}

pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Exact rational on a fixed decimal grid: `k / 10^digits`.
pub fn from_grid(k: u64, digits: u32) -> Rational {
    Rational::new(BigInt::from(k), BigInt::from(10u64.pow(digits)))
}

pub fn lcm_of_denominators<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// Rewrites `values` over a common denominator, returning the integer numerators
/// and the denominator.
pub fn scale_to_integers(values: &[Rational]) -> (Vec<BigInt>, BigInt) {
    let denom = lcm_of_denominators(values);
    let numers = values
        .iter()
        .map(|v| v.numer() * (&denom / v.denom()))
        .collect();
    (numers, denom)
}

/// Integer arithmetic used by the search routines. Implemented for `i128`
/// (fast path) and `BigInt` (fallback when magnitudes could overflow).
pub trait SearchInt:
    Clone + Ord + Debug + Zero + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self>
{
    fn from_big(value: &BigInt) -> Self;
    fn to_big(&self) -> BigInt;
}

impl SearchInt for i128 {
    fn from_big(value: &BigInt) -> Self {
        value.to_i128().expect("magnitude checked before narrowing")
    }
    fn to_big(&self) -> BigInt {
        BigInt::from(*self)
    }
}

impl SearchInt for BigInt {
    fn from_big(value: &BigInt) -> Self {
        value.clone()
    }
    fn to_big(&self) -> BigInt {
        self.clone()
    }
}

/// Whether products of two quantities bounded by `a` and `b` (and small sums of
/// such products) stay safely inside `i128`.
pub fn fits_i128(a: &BigInt, b: &BigInt) -> bool {
    let limit = BigInt::one() << 120u32;
    (a.abs() + BigInt::one()) * (b.abs() + BigInt::one()) < limit
}

/// `a/b < c/d` for positive denominators.
#[inline]
pub fn frac_lt<T: SearchInt>(a: &T, b: &T, c: &T, d: &T) -> bool {
    a.clone() * d.clone() < c.clone() * b.clone()
}

#[inline]
pub fn frac_le<T: SearchInt>(a: &T, b: &T, c: &T, d: &T) -> bool {
    a.clone() * d.clone() <= c.clone() * b.clone()
}

pub mod serde_rational {
    //! Serialize rationals as `"p/q"` strings; accept strings or JSON numbers.
    use super::*;

    pub fn serialize<S: Serializer>(value: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let text = NumberText::deserialize(d)?;
        parse_rational(&text.0).map_err(serde::de::Error::custom)
    }
}

pub mod serde_rational_vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(values: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(values.len()))?;
        for v in values {
            seq.serialize_element(&format_rational(v))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Rational>, D::Error> {
        let texts = Vec::<NumberText>::deserialize(d)?;
        texts
            .iter()
            .map(|t| parse_rational(&t.0).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// A number given either as a JSON string or a JSON number, kept as text so
/// that decimals convert to rationals without passing through binary floats.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
#[serde(transparent)]
pub struct NumberText(pub String);

impl<'de> Deserialize<'de> for NumberText {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::String(s) => Ok(NumberText(s)),
            serde_json::Value::Number(n) => Ok(NumberText(n.to_string())),
            other => Err(serde::de::Error::custom(format!(
                "expected number or numeric string, found {other}"
            ))),
        }
    }
}
