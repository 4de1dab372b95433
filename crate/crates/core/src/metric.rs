//! Finite metric tables, rectangular value grids and point sets.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::rational::{Rational, TruthValue};

/// A finite set of labelled points with a total, square distance table.
///
/// Construction does not enforce the metric axioms; use [`MetricTable::violations`]
/// to audit them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricTable {
    labels: Vec<String>,
    dist: Vec<TruthValue>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MetricViolation {
    Reflexivity { x: String, value: TruthValue },
    Symmetry { x: String, y: String },
    Separation { x: String, y: String },
    /// `d(x,y) > d(x,via) + d(via,y)`.
    Triangle {
        x: String,
        via: String,
        y: String,
        lhs: TruthValue,
        rhs: String,
    },
}

impl MetricTable {
    pub fn new(labels: Vec<String>, dist: Vec<TruthValue>) -> Self {
        assert_eq!(labels.len() * labels.len(), dist.len(), "distance table must be square");
        MetricTable { labels, dist }
    }

    pub fn from_fn(labels: Vec<String>, mut f: impl FnMut(usize, usize) -> TruthValue) -> Self {
        let n = labels.len();
        let mut dist = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                dist.push(f(i, j));
            }
        }
        MetricTable { labels, dist }
    }

    /// The discrete metric with all off-diagonal entries equal to `c`.
    pub fn discrete(labels: Vec<String>, c: TruthValue) -> Self {
        Self::from_fn(labels, |i, j| if i == j { TruthValue::zero() } else { c.clone() })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn d(&self, i: usize, j: usize) -> &TruthValue {
        &self.dist[i * self.labels.len() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: TruthValue) {
        let n = self.labels.len();
        self.dist[i * n + j] = v.clone();
        self.dist[j * n + i] = v;
    }

    pub fn row(&self, i: usize) -> &[TruthValue] {
        let n = self.labels.len();
        &self.dist[i * n..(i + 1) * n]
    }

    pub fn as_grid(&self) -> Grid {
        Grid::from_fn(self.len(), self.len(), |i, j| self.d(i, j).clone())
    }

    /// Sorted distinct positive distances.
    pub fn positive_values(&self) -> Vec<TruthValue> {
        let set: BTreeSet<TruthValue> = self.dist.iter().filter(|v| !v.is_zero()).cloned().collect();
        set.into_iter().collect()
    }

    /// Every failure of the pseudo-metric axioms, plus separation failures when
    /// `require_separation` is set.
    pub fn violations(&self, require_separation: bool) -> Vec<MetricViolation> {
        let n = self.len();
        let mut out = Vec::new();
        for i in 0..n {
            if !self.d(i, i).is_zero() {
                out.push(MetricViolation::Reflexivity {
                    x: self.labels[i].clone(),
                    value: self.d(i, i).clone(),
                });
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if self.d(i, j) != self.d(j, i) {
                    out.push(MetricViolation::Symmetry {
                        x: self.labels[i].clone(),
                        y: self.labels[j].clone(),
                    });
                }
                if require_separation && self.d(i, j).is_zero() {
                    out.push(MetricViolation::Separation {
                        x: self.labels[i].clone(),
                        y: self.labels[j].clone(),
                    });
                }
            }
        }
        out.extend(self.triangle_violations());
        out
    }

    pub fn triangle_violations(&self) -> Vec<MetricViolation> {
        let n = self.len();
        let mut out = Vec::new();
        for x in 0..n {
            for y in 0..n {
                for via in 0..n {
                    let rhs = self.d(x, via).value() + self.d(via, y).value();
                    if self.d(x, y).value() > &rhs {
                        out.push(MetricViolation::Triangle {
                            x: self.labels[x].clone(),
                            via: self.labels[via].clone(),
                            y: self.labels[y].clone(),
                            lhs: self.d(x, y).clone(),
                            rhs: crate::rational::format_rational(&rhs),
                        });
                    }
                }
            }
        }
        out
    }

    pub fn is_pseudometric(&self) -> bool {
        self.violations(false).is_empty()
    }

    pub fn is_metric(&self) -> bool {
        self.violations(true).is_empty()
    }

    pub fn separates_points(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| (0..n).all(|j| i == j || !self.d(i, j).is_zero()))
    }

    /// The `k`-th power with the maximum metric; tuples are enumerated
    /// lexicographically and labelled `(a,b,..)`.
    pub fn power(&self, k: usize) -> (MetricTable, Vec<Vec<usize>>) {
        let tuples = all_tuples(self.len(), k);
        let labels = tuples
            .iter()
            .map(|t| {
                if k == 1 {
                    self.labels[t[0]].clone()
                } else {
                    let parts: Vec<&str> = t.iter().map(|&i| self.labels[i].as_str()).collect();
                    format!("({})", parts.join(","))
                }
            })
            .collect();
        let table = MetricTable::from_fn(labels, |a, b| max_metric(self, &tuples[a], &tuples[b]));
        (table, tuples)
    }
}

/// Distance between tuples under the maximum metric.
pub fn max_metric(m: &MetricTable, a: &[usize], b: &[usize]) -> TruthValue {
    a.iter()
        .zip(b)
        .fold(TruthValue::zero(), |acc, (&x, &y)| acc.join(m.d(x, y)))
}

/// All tuples in `0..n` of length `k`, lexicographically.
pub fn all_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        let mut next = Vec::with_capacity(out.len() * n);
        for t in &out {
            for i in 0..n {
                let mut u = t.clone();
                u.push(i);
                next.push(u);
            }
        }
        out = next;
    }
    out
}

/// Position of `tuple` in the lexicographic enumeration of [`all_tuples`].
pub fn tuple_index(n: usize, tuple: &[usize]) -> usize {
    tuple.iter().fold(0, |acc, &i| acc * n + i)
}

/// A rectangular table of truth values, `rows × cols`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    rows: usize,
    cols: usize,
    cells: Vec<TruthValue>,
}

impl Grid {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> TruthValue) -> Self {
        let mut cells = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                cells.push(f(i, j));
            }
        }
        Grid { rows, cols, cells }
    }

    pub fn constant(rows: usize, cols: usize, v: TruthValue) -> Self {
        Grid {
            rows,
            cols,
            cells: vec![v; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &TruthValue {
        &self.cells[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: TruthValue) {
        self.cells[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[TruthValue] {
        &self.cells[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<TruthValue> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn to_metric_table(&self, labels: Vec<String>) -> MetricTable {
        assert_eq!(self.rows, self.cols);
        MetricTable::new(labels, self.cells.clone())
    }
}

/// A set of point indices into some ambient [`MetricTable`].
pub type PointSet = BTreeSet<usize>;

/// `min_{y∈set} d(x,y)`, or `None` for the empty set.
pub fn dist_to_set(m: &MetricTable, x: usize, set: &PointSet) -> Option<TruthValue> {
    set.iter().map(|&y| m.d(x, y).clone()).min()
}

/// `inf{d(x,y) : x∈a, y∈b}`, or `None` if either side is empty.
pub fn set_distance(m: &MetricTable, a: &PointSet, b: &PointSet) -> Option<TruthValue> {
    a.iter().filter_map(|&x| dist_to_set(m, x, b)).min()
}

/// Size of the largest subset whose points are pairwise at distance
/// strictly greater than `eps`.
pub fn separation_number(m: &MetricTable, points: &[usize], eps: &Rational) -> usize {
    fn grow(m: &MetricTable, eps: &Rational, chosen: &mut Vec<usize>, rest: &[usize], best: &mut usize) {
        if chosen.len() + rest.len() <= *best {
            return;
        }
        if rest.is_empty() {
            *best = chosen.len();
            return;
        }
        let (head, tail) = (rest[0], &rest[1..]);
        if chosen.iter().all(|&c| m.d(c, head).value() > eps) {
            chosen.push(head);
            grow(m, eps, chosen, tail, best);
            chosen.pop();
        }
        grow(m, eps, chosen, tail, best);
    }
    let mut uniq: Vec<usize> = points.to_vec();
    uniq.sort_unstable();
    uniq.dedup();
    let mut best = 0;
    grow(m, eps, &mut Vec::new(), &uniq, &mut best);
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn triangle_witness() {
        let mut m = MetricTable::discrete(labels(3), TruthValue::ratio(1, 4));
        m.set(0, 2, TruthValue::one());
        let v = m.triangle_violations();
        assert!(v.iter().any(|w| matches!(w, MetricViolation::Triangle { x, via, y, .. }
            if x == "x0" && via == "x1" && y == "x2")));
        assert!(!m.is_pseudometric());
    }

    #[test]
    fn power_uses_max_metric() {
        let mut m = MetricTable::discrete(labels(2), TruthValue::ratio(1, 2));
        m.set(0, 1, TruthValue::ratio(1, 4));
        let (p, tuples) = m.power(2);
        assert_eq!(p.len(), 4);
        assert_eq!(tuples[tuple_index(2, &[1, 0])], vec![1, 0]);
        assert_eq!(p.d(0, 3), &TruthValue::ratio(1, 4));
        assert!(p.is_metric());
    }

    #[test]
    fn separation_counts_strictly() {
        let m = MetricTable::discrete(labels(4), TruthValue::ratio(1, 4));
        assert_eq!(separation_number(&m, &[0, 1, 2, 3], &ratio(1, 8)), 4);
        assert_eq!(separation_number(&m, &[0, 1, 2, 3], &ratio(1, 4)), 1);
        assert_eq!(separation_number(&m, &[], &ratio(1, 4)), 0);
    }
}
