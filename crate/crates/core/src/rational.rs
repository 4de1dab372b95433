//! Exact rationals and the `[0,1]` truth-value domain.
//!
//! Every quantity in the crate is a `BigRational`; nothing is ever rounded.
//! On the wire rationals are `"num/den"` strings in lowest terms (the integers
//! `"0"` and `"1"`, or any bare integer, are accepted as shorthand).

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub type Rational = num_rational::BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RationalError {
    #[error("malformed rational `{0}` (expected \"num/den\")")]
    Malformed(String),
    #[error("rational `{0}` is not in lowest terms")]
    NotReduced(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
    #[error("value {0} lies outside [0,1]")]
    OutOfRange(String),
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// `2^-n`.
pub fn dyadic_unit(n: u32) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << n as usize)
}

/// Parses `"num/den"` (lowest terms) or a bare integer.
pub fn parse_rational(text: &str) -> Result<Rational, RationalError> {
    let s = text.trim();
    let parse_int = |part: &str| -> Result<BigInt, RationalError> {
        let ok = !part.is_empty()
            && part
                .char_indices()
                .all(|(i, c)| c.is_ascii_digit() || (i == 0 && c == '-'))
            && part != "-";
        if !ok {
            return Err(RationalError::Malformed(text.to_string()));
        }
        BigInt::from_str(part).map_err(|_| RationalError::Malformed(text.to_string()))
    };
    match s.split_once('/') {
        None => Ok(Rational::from_integer(parse_int(s)?)),
        Some((n, d)) => {
            let num = parse_int(n)?;
            let den = parse_int(d)?;
            if den.is_zero() {
                return Err(RationalError::ZeroDenominator(text.to_string()));
            }
            if den.is_negative() {
                return Err(RationalError::Malformed(text.to_string()));
            }
            let q = Rational::new(num.clone(), den.clone());
            if q.numer() != &num || q.denom() != &den {
                return Err(RationalError::NotReduced(text.to_string()));
            }
            Ok(q)
        }
    }
}

/// Canonical `"num/den"` rendering; integers print as `"k"`.
pub fn format_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// A truth value: an exact rational in `[0,1]`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TruthValue(Rational);

impl TruthValue {
    pub fn new(q: Rational) -> Result<Self, RationalError> {
        if q.is_negative() || q > Rational::one() {
            return Err(RationalError::OutOfRange(format_rational(&q)));
        }
        Ok(TruthValue(q))
    }

    /// Clamps an arbitrary rational into `[0,1]`.
    pub fn clamp(q: Rational) -> Self {
        if q.is_negative() {
            Self::zero()
        } else if q > Rational::one() {
            Self::one()
        } else {
            TruthValue(q)
        }
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Self::new(ratio(num, den)).expect("ratio outside [0,1]")
    }

    pub fn zero() -> Self {
        TruthValue(Rational::zero())
    }

    pub fn one() -> Self {
        TruthValue(Rational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }

    pub fn into_inner(self) -> Rational {
        self.0
    }

    /// `¬x = 1 − x`.
    pub fn negate(&self) -> Self {
        TruthValue(Rational::one() - &self.0)
    }

    pub fn meet(&self, other: &Self) -> Self {
        if self <= other {
            self.clone()
        } else {
            other.clone()
        }
    }

    pub fn join(&self, other: &Self) -> Self {
        if self >= other {
            self.clone()
        } else {
            other.clone()
        }
    }

    /// Truncated subtraction `x ∸ y = max(x − y, 0)`.
    pub fn monus(&self, other: &Self) -> Self {
        Self::clamp(&self.0 - &other.0)
    }

    /// Truncated addition `x ∔ y = min(x + y, 1)`.
    pub fn plus(&self, other: &Self) -> Self {
        Self::clamp(&self.0 + &other.0)
    }

    /// `q·x` truncated to `[0,1]`; `q` must be non-negative.
    pub fn scale(&self, q: &Rational) -> Self {
        Self::clamp(q * &self.0)
    }

    /// `|x − y|`.
    pub fn abs_diff(&self, other: &Self) -> Self {
        TruthValue((&self.0 - &other.0).abs())
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for TruthValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(&self.0))
    }
}

impl fmt::Debug for TruthValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TV({})", format_rational(&self.0))
    }
}

impl FromStr for TruthValue {
    type Err = RationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TruthValue::new(parse_rational(s)?)
    }
}

impl From<TruthValue> for Rational {
    fn from(t: TruthValue) -> Rational {
        t.0
    }
}

impl PartialEq<Rational> for TruthValue {
    fn eq(&self, other: &Rational) -> bool {
        &self.0 == other
    }
}

impl PartialOrd<Rational> for TruthValue {
    fn partial_cmp(&self, other: &Rational) -> Option<Ordering> {
        self.0.partial_cmp(other)
    }
}

impl Serialize for TruthValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&format_rational(&self.0))
    }
}

impl<'de> Deserialize<'de> for TruthValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for plain `Rational` fields (`#[serde(with = "rational::serde_q")]`).
pub mod serde_q {
    use super::*;

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}
