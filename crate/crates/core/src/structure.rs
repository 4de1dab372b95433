//! Finite metric structures: signature, tables, validation and JSON ingestion.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::metric::{all_tuples, tuple_index, MetricTable, MetricViolation};
use crate::plmap::{Interpolation, PLMap};
use crate::rational::{format_rational, Rational, RationalError, TruthValue};

/// Name reserved for the distinguished metric.
pub const METRIC_SYMBOL: &str = "d";

#[derive(Debug, Error)]
pub enum StructureError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("duplicate symbol `{0}`")]
    DuplicateSymbol(String),
    #[error("duplicate universe element `{0}`")]
    DuplicateElement(String),
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("metric entry missing for pair ({0}, {1})")]
    MissingMetric(String, String),
    #[error("conflicting metric entries for pair ({0}, {1})")]
    ConflictingMetric(String, String),
    #[error("table of `{symbol}` is incomplete: no entry for ({args})")]
    IncompleteTable { symbol: String, args: String },
    #[error("table of `{symbol}` has a duplicate entry for ({args})")]
    DuplicateEntry { symbol: String, args: String },
    #[error("row of `{symbol}` has {found} entries, expected {expected}")]
    RowShape {
        symbol: String,
        found: usize,
        expected: usize,
    },
    #[error("invalid modulus for `{0}`: {1}")]
    Modulus(String, String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error(transparent)]
    Rational(#[from] RationalError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolDecl {
    pub arity: usize,
    pub modulus: PLMap,
}

/// Symbols with arities and declared continuity moduli.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Signature {
    pub predicates: BTreeMap<String, SymbolDecl>,
    pub functions: BTreeMap<String, SymbolDecl>,
    pub constants: BTreeSet<String>,
}

impl Signature {
    pub fn predicate(&self, name: &str) -> Option<&SymbolDecl> {
        self.predicates.get(name)
    }

    pub fn function(&self, name: &str) -> Option<&SymbolDecl> {
        self.functions.get(name)
    }

    pub fn is_constant(&self, name: &str) -> bool {
        self.constants.contains(name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateTable {
    pub arity: usize,
    /// Values indexed by [`tuple_index`].
    pub values: Vec<TruthValue>,
    pub modulus: PLMap,
}

impl PredicateTable {
    pub fn unary(values: Vec<TruthValue>, modulus: PLMap) -> Self {
        PredicateTable {
            arity: 1,
            values,
            modulus,
        }
    }

    pub fn value(&self, n: usize, args: &[usize]) -> &TruthValue {
        &self.values[tuple_index(n, args)]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionTable {
    pub arity: usize,
    pub values: Vec<usize>,
    pub modulus: PLMap,
}

impl FunctionTable {
    pub fn value(&self, n: usize, args: &[usize]) -> usize {
        self.values[tuple_index(n, args)]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteStructure {
    pub metric: MetricTable,
    pub predicates: BTreeMap<String, PredicateTable>,
    pub functions: BTreeMap<String, FunctionTable>,
    pub constants: BTreeMap<String, usize>,
}

impl FiniteStructure {
    pub fn new(metric: MetricTable) -> Self {
        FiniteStructure {
            metric,
            predicates: BTreeMap::new(),
            functions: BTreeMap::new(),
            constants: BTreeMap::new(),
        }
    }

    /// Constants named after every element, as in the shipped fixtures.
    pub fn with_element_constants(mut self) -> Self {
        for (i, l) in self.metric.labels().iter().enumerate() {
            self.constants.insert(l.clone(), i);
        }
        self
    }

    pub fn with_predicate(mut self, name: &str, table: PredicateTable) -> Self {
        self.predicates.insert(name.to_string(), table);
        self
    }

    pub fn size(&self) -> usize {
        self.metric.len()
    }

    pub fn universe(&self) -> &[String] {
        self.metric.labels()
    }

    pub fn element(&self, label: &str) -> Result<usize, StructureError> {
        self.metric
            .index_of(label)
            .ok_or_else(|| StructureError::UnknownElement(label.to_string()))
    }

    pub fn d(&self, i: usize, j: usize) -> &TruthValue {
        self.metric.d(i, j)
    }

    pub fn predicate(&self, name: &str) -> Result<&PredicateTable, StructureError> {
        self.predicates
            .get(name)
            .ok_or_else(|| StructureError::UnknownSymbol(name.to_string()))
    }

    /// A unary predicate as a plain value vector.
    pub fn unary_table(&self, name: &str) -> Result<Vec<TruthValue>, StructureError> {
        if name == METRIC_SYMBOL {
            return Err(StructureError::Invalid("the metric is binary".into()));
        }
        let p = self.predicate(name)?;
        if p.arity != 1 {
            return Err(StructureError::Invalid(format!("`{name}` has arity {}, expected 1", p.arity)));
        }
        Ok(p.values.clone())
    }

    /// A binary predicate (or `d`) as a square grid.
    pub fn binary_table(&self, name: &str) -> Result<crate::metric::Grid, StructureError> {
        if name == METRIC_SYMBOL {
            return Ok(self.metric.as_grid());
        }
        let p = self.predicate(name)?;
        if p.arity != 2 {
            return Err(StructureError::Invalid(format!("`{name}` has arity {}, expected 2", p.arity)));
        }
        let n = self.size();
        Ok(crate::metric::Grid::from_fn(n, n, |i, j| p.value(n, &[i, j]).clone()))
    }

    pub fn signature(&self) -> Signature {
        Signature {
            predicates: self
                .predicates
                .iter()
                .map(|(k, p)| {
                    (
                        k.clone(),
                        SymbolDecl {
                            arity: p.arity,
                            modulus: p.modulus.clone(),
                        },
                    )
                })
                .collect(),
            functions: self
                .functions
                .iter()
                .map(|(k, f)| {
                    (
                        k.clone(),
                        SymbolDecl {
                            arity: f.arity,
                            modulus: f.modulus.clone(),
                        },
                    )
                })
                .collect(),
            constants: self.constants.keys().cloned().collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, StructureError> {
        let file: StructureFile = serde_json::from_str(text)?;
        file.build()
    }

    pub fn to_json_value(&self) -> Value {
        serde_json::to_value(StructureFile::from_structure(self)).expect("structure serializes")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableSpec {
    pub arity: usize,
    pub table: Vec<Vec<Value>>,
    pub modulus: PLMap,
}

/// On-disk layout of a structure file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructureFile {
    pub universe: Vec<String>,
    pub metric: Vec<(String, String, String)>,
    #[serde(default)]
    pub predicates: BTreeMap<String, TableSpec>,
    #[serde(default)]
    pub functions: BTreeMap<String, TableSpec>,
    #[serde(default)]
    pub constants: BTreeMap<String, String>,
}

fn cell_str(v: &Value) -> Result<&str, StructureError> {
    v.as_str()
        .ok_or_else(|| StructureError::Invalid(format!("expected string table cell, found {v}")))
}

impl StructureFile {
    pub fn build(&self) -> Result<FiniteStructure, StructureError> {
        let n = self.universe.len();
        let mut index = BTreeMap::new();
        for (i, e) in self.universe.iter().enumerate() {
            if index.insert(e.clone(), i).is_some() {
                return Err(StructureError::DuplicateElement(e.clone()));
            }
        }
        let lookup = |e: &str| -> Result<usize, StructureError> {
            index
                .get(e)
                .copied()
                .ok_or_else(|| StructureError::UnknownElement(e.to_string()))
        };

        let mut dist: Vec<Option<TruthValue>> = vec![None; n * n];
        for (a, b, v) in &self.metric {
            let (i, j) = (lookup(a)?, lookup(b)?);
            let v: TruthValue = v.parse()?;
            for (x, y) in [(i, j), (j, i)] {
                match &dist[x * n + y] {
                    Some(old) if old != &v => {
                        return Err(StructureError::ConflictingMetric(a.clone(), b.clone()))
                    }
                    _ => dist[x * n + y] = Some(v.clone()),
                }
            }
        }
        let mut cells = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                match dist[i * n + j].take() {
                    Some(v) => cells.push(v),
                    None if i == j => cells.push(TruthValue::zero()),
                    None => {
                        return Err(StructureError::MissingMetric(
                            self.universe[i].clone(),
                            self.universe[j].clone(),
                        ))
                    }
                }
            }
        }
        let mut s = FiniteStructure::new(MetricTable::new(self.universe.clone(), cells));

        let mut seen = BTreeSet::new();
        seen.insert(METRIC_SYMBOL.to_string());
        let mut claim = |name: &str| -> Result<(), StructureError> {
            if seen.insert(name.to_string()) {
                Ok(())
            } else {
                Err(StructureError::DuplicateSymbol(name.to_string()))
            }
        };

        for (name, spec) in &self.predicates {
            claim(name)?;
            let values = read_table(name, spec, n, &lookup, |v| Ok(cell_str(v)?.parse::<TruthValue>()?))?;
            check_modulus_shape(name, &spec.modulus)?;
            s.predicates.insert(
                name.clone(),
                PredicateTable {
                    arity: spec.arity,
                    values,
                    modulus: spec.modulus.clone(),
                },
            );
        }
        for (name, spec) in &self.functions {
            claim(name)?;
            let values = read_table(name, spec, n, &lookup, |v| lookup(cell_str(v)?))?;
            check_modulus_shape(name, &spec.modulus)?;
            s.functions.insert(
                name.clone(),
                FunctionTable {
                    arity: spec.arity,
                    values,
                    modulus: spec.modulus.clone(),
                },
            );
        }
        for (name, e) in &self.constants {
            claim(name)?;
            s.constants.insert(name.clone(), lookup(e)?);
        }
        Ok(s)
    }

    pub fn from_structure(s: &FiniteStructure) -> Self {
        let n = s.size();
        let u = s.universe();
        let mut metric = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                metric.push((u[i].clone(), u[j].clone(), s.d(i, j).to_string()));
            }
        }
        let rows = |arity: usize, cell: &dyn Fn(usize) -> Value| -> Vec<Vec<Value>> {
            all_tuples(n, arity)
                .iter()
                .enumerate()
                .map(|(k, t)| {
                    let mut row: Vec<Value> = t.iter().map(|&i| Value::String(u[i].clone())).collect();
                    row.push(cell(k));
                    row
                })
                .collect()
        };
        StructureFile {
            universe: u.to_vec(),
            metric,
            predicates: s
                .predicates
                .iter()
                .map(|(k, p)| {
                    (
                        k.clone(),
                        TableSpec {
                            arity: p.arity,
                            table: rows(p.arity, &|i| Value::String(p.values[i].to_string())),
                            modulus: p.modulus.clone(),
                        },
                    )
                })
                .collect(),
            functions: s
                .functions
                .iter()
                .map(|(k, f)| {
                    (
                        k.clone(),
                        TableSpec {
                            arity: f.arity,
                            table: rows(f.arity, &|i| Value::String(u[f.values[i]].clone())),
                            modulus: f.modulus.clone(),
                        },
                    )
                })
                .collect(),
            constants: s.constants.iter().map(|(k, &i)| (k.clone(), u[i].clone())).collect(),
        }
    }
}

fn check_modulus_shape(name: &str, m: &PLMap) -> Result<(), StructureError> {
    if !m.is_zero_at_zero() {
        return Err(StructureError::Modulus(name.to_string(), "modulus(0) must be 0".into()));
    }
    Ok(())
}

fn read_table<T: Clone>(
    name: &str,
    spec: &TableSpec,
    n: usize,
    lookup: &dyn Fn(&str) -> Result<usize, StructureError>,
    cell: impl Fn(&Value) -> Result<T, StructureError>,
) -> Result<Vec<T>, StructureError> {
    let size = n.pow(spec.arity as u32);
    let mut slots: Vec<Option<T>> = vec![None; size];
    for row in &spec.table {
        if row.len() != spec.arity + 1 {
            return Err(StructureError::RowShape {
                symbol: name.to_string(),
                found: row.len(),
                expected: spec.arity + 1,
            });
        }
        let args = row[..spec.arity]
            .iter()
            .map(|v| lookup(cell_str(v)?))
            .collect::<Result<Vec<_>, _>>()?;
        let k = tuple_index(n, &args);
        if slots[k].is_some() {
            return Err(StructureError::DuplicateEntry {
                symbol: name.to_string(),
                args: join_labels(&row[..spec.arity]),
            });
        }
        slots[k] = Some(cell(&row[spec.arity])?);
    }
    let tuples = all_tuples(n, spec.arity);
    slots
        .into_iter()
        .zip(&tuples)
        .map(|(v, t)| {
            v.ok_or_else(|| StructureError::IncompleteTable {
                symbol: name.to_string(),
                args: t.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(","),
            })
        })
        .collect()
}

fn join_labels(v: &[Value]) -> String {
    v.iter()
        .map(|x| x.as_str().unwrap_or("?").to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// A pair of argument tuples differing in one position where the declared
/// modulus is exceeded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModulusViolation {
    pub symbol: String,
    pub position: usize,
    pub left: Vec<String>,
    pub right: Vec<String>,
    pub distance: TruthValue,
    pub difference: TruthValue,
    pub bound: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StructureReport {
    pub passed: bool,
    pub metric_violations: Vec<MetricViolation>,
    pub modulus_violations: Vec<ModulusViolation>,
}

/// Audits the metric axioms and every declared modulus.
pub fn check_structure(m: &FiniteStructure) -> StructureReport {
    let metric_violations = m.metric.violations(true);
    let mut modulus_violations = Vec::new();
    let n = m.size();
    let labels = |t: &[usize]| t.iter().map(|&i| m.universe()[i].clone()).collect::<Vec<_>>();
    for (name, p) in &m.predicates {
        for_each_argument_pair(n, p.arity, |a, b, pos| {
            let dist = m.d(a[pos], b[pos]);
            let diff = p.value(n, a).abs_diff(p.value(n, b));
            let bound = p.modulus.eval(dist.value());
            if diff.value() > &bound {
                modulus_violations.push(ModulusViolation {
                    symbol: name.clone(),
                    position: pos,
                    left: labels(a),
                    right: labels(b),
                    distance: dist.clone(),
                    difference: diff,
                    bound: format_rational(&bound),
                });
            }
        });
    }
    for (name, f) in &m.functions {
        for_each_argument_pair(n, f.arity, |a, b, pos| {
            let dist = m.d(a[pos], b[pos]);
            let diff = m.d(f.value(n, a), f.value(n, b)).clone();
            let bound = f.modulus.eval(dist.value());
            if diff.value() > &bound {
                modulus_violations.push(ModulusViolation {
                    symbol: name.clone(),
                    position: pos,
                    left: labels(a),
                    right: labels(b),
                    distance: dist.clone(),
                    difference: diff,
                    bound: format_rational(&bound),
                });
            }
        });
    }
    StructureReport {
        passed: metric_violations.is_empty() && modulus_violations.is_empty(),
        metric_violations,
        modulus_violations,
    }
}

/// Calls `f(a, b, pos)` for every pair of tuples that differ exactly at `pos`,
/// each unordered pair once (`a[pos] < b[pos]`).
fn for_each_argument_pair(n: usize, arity: usize, mut f: impl FnMut(&[usize], &[usize], usize)) {
    for a in all_tuples(n, arity) {
        for pos in 0..arity {
            for v in (a[pos] + 1)..n {
                let mut b = a.clone();
                b[pos] = v;
                f(&a, &b, pos);
            }
        }
    }
}

/// The least nondecreasing right-continuous step map `Δ` with
/// `|P(ā) − P(b̄)| ≤ Δ(d(a_i, b_i))` for tuples differing in one argument,
/// where `value_gap(ā, b̄)` measures the output difference.
pub fn realized_modulus_by(
    metric: &MetricTable,
    arity: usize,
    mut value_gap: impl FnMut(&[usize], &[usize]) -> TruthValue,
) -> PLMap {
    let n = metric.len();
    let mut worst: BTreeMap<TruthValue, TruthValue> = BTreeMap::new();
    for_each_argument_pair(n, arity, |a, b, pos| {
        let dist = metric.d(a[pos], b[pos]).clone();
        let gap = value_gap(a, b);
        let slot = worst.entry(dist).or_insert_with(TruthValue::zero);
        if gap > *slot {
            *slot = gap;
        }
    });
    let mut points = vec![(Rational::zero(), Rational::zero())];
    let mut running = TruthValue::zero();
    for (dist, gap) in worst {
        running = running.join(&gap);
        if dist.is_zero() {
            // coincident points; a genuine metric never reaches this
            points[0].1 = running.value().clone();
            continue;
        }
        points.push((dist.into_inner(), running.value().clone()));
    }
    PLMap::new(points, Interpolation::StepRight).expect("running maxima are monotone")
}

/// Tightest modulus realised by a predicate or function symbol (or `d`)
/// with respect to `metric`.
pub fn realized_modulus_wrt(
    m: &FiniteStructure,
    symbol: &str,
    metric: &MetricTable,
) -> Result<PLMap, StructureError> {
    let n = m.size();
    if symbol == METRIC_SYMBOL {
        return Ok(realized_modulus_by(metric, 2, |a, b| m.d(a[0], a[1]).abs_diff(m.d(b[0], b[1]))));
    }
    if let Some(p) = m.predicates.get(symbol) {
        return Ok(realized_modulus_by(metric, p.arity, |a, b| p.value(n, a).abs_diff(p.value(n, b))));
    }
    if let Some(f) = m.functions.get(symbol) {
        return Ok(realized_modulus_by(metric, f.arity, |a, b| {
            metric.d(f.value(n, a), f.value(n, b)).clone()
        }));
    }
    Err(StructureError::UnknownSymbol(symbol.to_string()))
}

pub fn realized_modulus(m: &FiniteStructure, symbol: &str) -> Result<PLMap, StructureError> {
    realized_modulus_wrt(m, symbol, &m.metric)
}
