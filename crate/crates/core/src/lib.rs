//! Exact continuous first-order logic over finite metric structures.
//!
//! Truth values are rationals in `[0,1]`; every computation is exact.

pub mod chains;
pub mod definable;
pub mod demo;
pub mod fixtures;
pub mod forge;
pub mod formula;
pub mod groups;
pub mod metric;
pub mod plmap;
pub mod rational;
pub mod structure;
pub mod topometric;

pub use formula::{eval_formula, format_formula, parse_formula, Assignment, Formula, Term};
pub use metric::{MetricTable, PointSet};
pub use plmap::{Interpolation, PLMap};
pub use rational::{parse_rational, format_rational, Rational, TruthValue};
pub use structure::{check_structure, realized_modulus, FiniteStructure, Signature};
