//! The standard-part predicate `P(qa)` as a function of `r ∈ [−∞, ∞]` and `q ∈ ℚ`.

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::rational::{format_rational, parse_rational, Rational, RationalError, TruthValue};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExtRational {
    NegInf,
    Finite(Rational),
    PosInf,
}

impl ExtRational {
    /// Product with `0 · ±∞ = 0`.
    pub fn times(&self, q: &Rational) -> ExtRational {
        match self {
            ExtRational::Finite(r) => ExtRational::Finite(r * q),
            _ if q.is_zero() => ExtRational::Finite(Rational::zero()),
            ExtRational::PosInf if q.is_positive() => ExtRational::PosInf,
            ExtRational::NegInf if q.is_negative() => ExtRational::PosInf,
            _ => ExtRational::NegInf,
        }
    }

    /// `(r⁺, r⁻)` with `r = r⁺ − r⁻` and at least one of them zero.
    pub fn split(&self) -> (ExtRational, ExtRational) {
        let zero = ExtRational::Finite(Rational::zero());
        match self {
            ExtRational::PosInf => (ExtRational::PosInf, zero),
            ExtRational::NegInf => (zero, ExtRational::PosInf),
            ExtRational::Finite(r) if r.is_negative() => (zero, ExtRational::Finite(-r)),
            ExtRational::Finite(r) => (ExtRational::Finite(r.clone()), zero),
        }
    }
}

impl fmt::Display for ExtRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtRational::NegInf => f.write_str("-inf"),
            ExtRational::PosInf => f.write_str("inf"),
            ExtRational::Finite(r) => f.write_str(&format_rational(r)),
        }
    }
}

impl FromStr for ExtRational {
    type Err = RationalError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "+inf" | "∞" | "+∞" => Ok(ExtRational::PosInf),
            "-inf" | "-∞" | "−∞" => Ok(ExtRational::NegInf),
            t => parse_rational(t).map(ExtRational::Finite),
        }
    }
}

impl Serialize for ExtRational {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DemoCase {
    /// `qr ≥ 1`
    Saturated,
    /// `0 ≤ qr ≤ 1`
    Linear,
    /// `qr ≤ 0`
    Vanishing,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DemoRow {
    pub r: ExtRational,
    #[serde(serialize_with = "ser_q")]
    pub q: Rational,
    pub r_plus: ExtRational,
    pub r_minus: ExtRational,
    pub qr: ExtRational,
    pub case: DemoCase,
    pub value: TruthValue,
}

fn ser_q<S: serde::Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_rational(q))
}

pub fn p_of_qa(r: &ExtRational, q: &Rational) -> DemoRow {
    let qr = r.times(q);
    let one = ExtRational::Finite(Rational::one());
    let zero = ExtRational::Finite(Rational::zero());
    let (case, value) = if qr >= one {
        (DemoCase::Saturated, TruthValue::one())
    } else if qr <= zero {
        (DemoCase::Vanishing, TruthValue::zero())
    } else {
        let ExtRational::Finite(v) = &qr else { unreachable!("strictly between 0 and 1") };
        (DemoCase::Linear, TruthValue::new(v.clone()).expect("in (0,1)"))
    };
    let (r_plus, r_minus) = r.split();
    DemoRow {
        r: r.clone(),
        q: q.clone(),
        r_plus,
        r_minus,
        qr,
        case,
        value,
    }
}

/// The samples printed by the `demo` verb when none are given.
pub fn default_samples() -> Vec<(ExtRational, Rational)> {
    let f = |s: &str| s.parse::<ExtRational>().expect("literal");
    let q = |s: &str| parse_rational(s).expect("literal");
    vec![
        (f("1/2"), q("1")),
        (f("1/2"), q("3")),
        (f("inf"), q("0")),
        (f("1/2"), q("-1")),
        (f("-inf"), q("-1/4")),
        (f("inf"), q("1/8")),
    ]
}

pub fn demo_table(samples: &[(ExtRational, Rational)]) -> Vec<DemoRow> {
    samples.iter().map(|(r, q)| p_of_qa(r, q)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn cases() {
        let half: ExtRational = "1/2".parse().unwrap();
        assert_eq!(p_of_qa(&half, &int(1)).value, TruthValue::ratio(1, 2));
        assert_eq!(p_of_qa(&half, &int(3)).value, TruthValue::one());
        let row = p_of_qa(&ExtRational::PosInf, &int(0));
        assert_eq!((row.value, row.case), (TruthValue::zero(), DemoCase::Vanishing));
        assert_eq!(p_of_qa(&ExtRational::NegInf, &ratio(-1, 4)).value, TruthValue::one());
        assert_eq!("-1/3".parse::<ExtRational>().unwrap().split().1, ExtRational::Finite(ratio(1, 3)));
    }
}
