//! Piecewise maps `[0,1] → [0,1]`: continuity moduli and the weak inverse
//! used by metric repair.

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{format_rational, parse_rational, Rational, RationalError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    /// Constant on `(x_{i-1}, x_i]` with value `y_i`.
    StepLeft,
    /// Constant on `[x_i, x_{i+1})` with value `y_i`.
    StepRight,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PLMapError {
    #[error("breakpoints are not nondecreasing at index {0}")]
    NotMonotone(usize),
    #[error("breakpoint coordinate outside [0,1] at index {0}")]
    OutOfRange(usize),
    #[error("breakpoints do not cover [0,1] for {0:?} interpolation")]
    Coverage(Interpolation),
    #[error("empty breakpoint list")]
    Empty,
    #[error("negative Lipschitz constant")]
    NegativeLipschitz,
    #[error("malformed modulus `{0}`")]
    Malformed(String),
    #[error(transparent)]
    Rational(#[from] RationalError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PLMap {
    /// `t ↦ min(1, q·t)`.
    Lipschitz(Rational),
    Breakpoints {
        points: Vec<(Rational, Rational)>,
        mode: Interpolation,
    },
}

impl PLMap {
    pub fn lipschitz(q: Rational) -> Result<Self, PLMapError> {
        if q.is_negative() {
            return Err(PLMapError::NegativeLipschitz);
        }
        Ok(PLMap::Lipschitz(q))
    }

    pub fn identity() -> Self {
        PLMap::Lipschitz(Rational::one())
    }

    pub fn zero() -> Self {
        PLMap::Lipschitz(Rational::zero())
    }

    pub fn new(points: Vec<(Rational, Rational)>, mode: Interpolation) -> Result<Self, PLMapError> {
        if points.is_empty() {
            return Err(PLMapError::Empty);
        }
        let unit = |q: &Rational| !q.is_negative() && q <= &Rational::one();
        for (i, (x, y)) in points.iter().enumerate() {
            if !unit(x) || !unit(y) {
                return Err(PLMapError::OutOfRange(i));
            }
            if i > 0 {
                let (px, py) = &points[i - 1];
                // abscissae strictly increase; values never decrease
                if x <= px || y < py {
                    return Err(PLMapError::NotMonotone(i));
                }
            }
        }
        let first = &points[0].0;
        let last = &points[points.len() - 1].0;
        let covers = match mode {
            Interpolation::StepLeft => last.is_one(),
            Interpolation::StepRight => first.is_zero(),
            Interpolation::Linear => first.is_zero() && last.is_one(),
        };
        if !covers {
            return Err(PLMapError::Coverage(mode));
        }
        Ok(PLMap::Breakpoints { points, mode })
    }

    pub fn eval(&self, t: &Rational) -> Rational {
        match self {
            PLMap::Lipschitz(q) => {
                let v = q * t;
                if v > Rational::one() {
                    Rational::one()
                } else {
                    v
                }
            }
            PLMap::Breakpoints { points, mode } => match mode {
                Interpolation::StepLeft => points
                    .iter()
                    .find(|(x, _)| x >= t)
                    .map(|(_, y)| y.clone())
                    .unwrap_or_else(|| points[points.len() - 1].1.clone()),
                Interpolation::StepRight => points
                    .iter()
                    .rev()
                    .find(|(x, _)| x <= t)
                    .map(|(_, y)| y.clone())
                    .unwrap_or_else(|| points[0].1.clone()),
                Interpolation::Linear => {
                    if t <= &points[0].0 {
                        return points[0].1.clone();
                    }
                    for w in points.windows(2) {
                        let ((x0, y0), (x1, y1)) = (&w[0], &w[1]);
                        if t <= x1 {
                            return y0 + (y1 - y0) * (t - x0) / (x1 - x0);
                        }
                    }
                    points[points.len() - 1].1.clone()
                }
            },
        }
    }

    pub fn is_zero_at_zero(&self) -> bool {
        self.eval(&Rational::zero()).is_zero()
    }

    pub fn mode(&self) -> Option<Interpolation> {
        match self {
            PLMap::Lipschitz(_) => None,
            PLMap::Breakpoints { mode, .. } => Some(*mode),
        }
    }

    pub fn points(&self) -> Option<&[(Rational, Rational)]> {
        match self {
            PLMap::Lipschitz(_) => None,
            PLMap::Breakpoints { points, .. } => Some(points),
        }
    }

    /// Parses the textual form `"lipschitz q"`.
    pub fn parse_lipschitz(text: &str) -> Result<Self, PLMapError> {
        let rest = text
            .trim()
            .strip_prefix("lipschitz")
            .ok_or_else(|| PLMapError::Malformed(text.to_string()))?;
        PLMap::lipschitz(parse_rational(rest.trim())?)
    }
}

impl fmt::Display for PLMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PLMap::Lipschitz(q) => write!(f, "lipschitz {}", format_rational(q)),
            PLMap::Breakpoints { points, mode } => {
                write!(f, "{mode:?}[")?;
                for (i, (x, y)) in points.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{}↦{}", format_rational(x), format_rational(y))?;
                }
                f.write_str("]")
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PLMapRepr {
    Lipschitz(String),
    Pairs(Vec<(String, String)>),
    Full {
        mode: Interpolation,
        points: Vec<(String, String)>,
    },
}

impl Serialize for PLMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            PLMap::Lipschitz(_) => PLMapRepr::Lipschitz(self.to_string()).serialize(s),
            PLMap::Breakpoints { points, mode } => PLMapRepr::Full {
                mode: *mode,
                points: points
                    .iter()
                    .map(|(x, y)| (format_rational(x), format_rational(y)))
                    .collect(),
            }
            .serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for PLMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let parse_pairs = |pairs: Vec<(String, String)>| -> Result<Vec<(Rational, Rational)>, PLMapError> {
            pairs
                .into_iter()
                .map(|(x, y)| Ok((parse_rational(&x)?, parse_rational(&y)?)))
                .collect()
        };
        match PLMapRepr::deserialize(d)? {
            PLMapRepr::Lipschitz(text) => PLMap::parse_lipschitz(&text).map_err(D::Error::custom),
            // a bare breakpoint list is read as a right-continuous step modulus
            PLMapRepr::Pairs(pairs) => parse_pairs(pairs)
                .and_then(|p| PLMap::new(p, Interpolation::StepRight))
                .map_err(D::Error::custom),
            PLMapRepr::Full { mode, points } => parse_pairs(points)
                .and_then(|p| PLMap::new(p, mode))
                .map_err(D::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn lipschitz_truncates() {
        let m = PLMap::lipschitz(int(2)).unwrap();
        assert_eq!(m.eval(&ratio(1, 4)), ratio(1, 2));
        assert_eq!(m.eval(&ratio(3, 4)), int(1));
        assert!(PLMap::lipschitz(int(-1)).is_err());
    }

    #[test]
    fn step_modes() {
        let pts = vec![(int(0), int(0)), (ratio(1, 2), ratio(1, 2)), (int(1), int(1))];
        let left = PLMap::new(pts.clone(), Interpolation::StepLeft).unwrap();
        let right = PLMap::new(pts.clone(), Interpolation::StepRight).unwrap();
        let lin = PLMap::new(pts, Interpolation::Linear).unwrap();
        assert_eq!(left.eval(&ratio(1, 4)), ratio(1, 2));
        assert_eq!(left.eval(&ratio(1, 2)), ratio(1, 2));
        assert_eq!(right.eval(&ratio(1, 4)), int(0));
        assert_eq!(right.eval(&ratio(1, 2)), ratio(1, 2));
        assert_eq!(lin.eval(&ratio(1, 4)), ratio(1, 4));
    }

    #[test]
    fn rejects_bad_breakpoints() {
        let bad = vec![(int(0), ratio(1, 2)), (ratio(1, 2), ratio(1, 4))];
        assert!(matches!(
            PLMap::new(bad, Interpolation::StepRight),
            Err(PLMapError::NotMonotone(1))
        ));
        let short = vec![(int(0), int(0)), (ratio(1, 2), ratio(1, 2))];
        assert!(matches!(
            PLMap::new(short, Interpolation::Linear),
            Err(PLMapError::Coverage(_))
        ));
    }

    #[test]
    fn json_forms() {
        let m: PLMap = serde_json::from_str("\"lipschitz 2\"").unwrap();
        assert_eq!(m, PLMap::Lipschitz(int(2)));
        let m: PLMap = serde_json::from_str("[[\"0\",\"0\"],[\"1/4\",\"1/2\"]]").unwrap();
        assert_eq!(m.eval(&ratio(1, 3)), ratio(1, 2));
        let back = serde_json::to_string(&m).unwrap();
        let again: PLMap = serde_json::from_str(&back).unwrap();
        assert_eq!(m, again);
    }
}
