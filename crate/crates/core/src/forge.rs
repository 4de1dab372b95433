//! Metric repair, partial-metric extension, uniform equivalence and metric swap.

use std::collections::BTreeSet;

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::definable::zero_set;
use crate::metric::{dist_to_set, Grid, MetricTable, MetricViolation, PointSet};
use crate::plmap::{Interpolation, PLMap};
use crate::rational::{dyadic_unit, format_rational, int, Rational, TruthValue};
use crate::structure::{realized_modulus_by, FiniteStructure, PredicateTable, METRIC_SYMBOL};

/// Finest dyadic level tried by the repair pipeline.
pub const MAX_LEVEL: u32 = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ForgeError {
    #[error("predicate is not symmetric at ({0}, {1})")]
    NotSymmetric(String, String),
    #[error("predicate is not reflexive at {0}")]
    NotReflexive(String),
    #[error("no dyadic f at level {level}: constraint g(f({t}), f({u})) < f({sum}) cannot be met")]
    Infeasible {
        level: u32,
        t: String,
        u: String,
        sum: String,
    },
    #[error("repaired table fails verification: {0}")]
    Unverified(String),
    #[error("table shape mismatch: {0}")]
    Shape(String),
    #[error("d1 is not a pseudo-metric on X: {0:?}")]
    NotPseudometric(MetricViolation),
    #[error("not a metric: {0:?}")]
    NotMetric(MetricViolation),
    #[error("ψ1 disagrees with d1 at ({0}, {1})")]
    Disagrees(String, String),
    #[error("zero set of φ does not match X")]
    ZeroSetMismatch,
    #[error("symbol `{0}` already exists")]
    NameClash(String),
    #[error("`{symbol}` is not uniformly continuous w.r.t. the new metric")]
    NotContinuous { symbol: String },
}

fn check_symmetric_reflexive(labels: &[String], phi: &Grid) -> Result<(), ForgeError> {
    let n = labels.len();
    if phi.rows() != n || phi.cols() != n {
        return Err(ForgeError::Shape(format!("expected {n}×{n} table")));
    }
    for i in 0..n {
        if !phi.get(i, i).is_zero() {
            return Err(ForgeError::NotReflexive(labels[i].clone()));
        }
        for j in 0..i {
            if phi.get(i, j) != phi.get(j, i) {
                return Err(ForgeError::NotSymmetric(labels[j].clone(), labels[i].clone()));
            }
        }
    }
    Ok(())
}

/// `g(t,u) = sup{φ(x,y) : ∃z φ(x,z) ≤ t ∧ φ(y,z) ≤ u}`, constant between
/// consecutive values of `φ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepFunction2D {
    /// Sorted distinct values of `φ`; always starts with 0.
    pub grid: Vec<TruthValue>,
    pub table: Grid,
}

impl StepFunction2D {
    /// Index of the largest grid value `≤ s`.
    pub fn floor_index(&self, s: &Rational) -> usize {
        self.grid.partition_point(|v| v.value() <= s) - 1
    }

    pub fn eval(&self, t: &Rational, u: &Rational) -> &TruthValue {
        self.table.get(self.floor_index(t), self.floor_index(u))
    }

    /// The zero function on a single-point grid.
    pub fn zero() -> Self {
        StepFunction2D {
            grid: vec![TruthValue::zero()],
            table: Grid::constant(1, 1, TruthValue::zero()),
        }
    }
}

pub fn compute_g(phi: &Grid) -> StepFunction2D {
    let n = phi.rows();
    let mut values: BTreeSet<TruthValue> = (0..n).flat_map(|i| phi.row(i).to_vec()).collect();
    values.insert(TruthValue::zero());
    let grid: Vec<TruthValue> = values.into_iter().collect();
    let k = grid.len();
    let mut table = Grid::constant(k, k, TruthValue::zero());
    // each (x, y, z) feeds every cell at or above (φ(x,z), φ(y,z))
    let index = |v: &TruthValue| grid.binary_search(v).expect("grid holds every value");
    let mut direct = Grid::constant(k, k, TruthValue::zero());
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                let (i, j) = (index(phi.get(x, z)), index(phi.get(y, z)));
                if phi.get(x, y) > direct.get(i, j) {
                    direct.set(i, j, phi.get(x, y).clone());
                }
            }
        }
    }
    for i in 0..k {
        for j in 0..k {
            let mut best = direct.get(i, j).clone();
            if i > 0 {
                best = best.join(table.get(i - 1, j));
            }
            if j > 0 {
                best = best.join(table.get(i, j - 1));
            }
            table.set(i, j, best);
        }
    }
    StepFunction2D { grid, table }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GHypotheses {
    /// `g(0,t) = t` at every grid value.
    pub strong: bool,
    /// `g(0,t) ≤ t` at every grid value.
    pub weak: bool,
    /// If `g(u,w) < t` there is `v > u` with `g(v,w) < t`.
    pub right_slack: bool,
    pub symmetric: bool,
    pub monotone: bool,
    pub failures: Vec<String>,
}

/// Checks the hypotheses on `g` at the grid points (and, for the slack
/// condition, just to the right of them).
pub fn check_g_hypotheses(g: &StepFunction2D) -> GHypotheses {
    let k = g.grid.len();
    let mut failures = Vec::new();
    let mut strong = true;
    let mut weak = true;
    for (j, t) in g.grid.iter().enumerate() {
        let v = g.table.get(0, j);
        if v != t {
            strong = false;
            failures.push(format!("g(0,{t}) = {v} ≠ {t}"));
        }
        if v > t {
            weak = false;
            failures.push(format!("g(0,{t}) = {v} > {t}"));
        }
    }
    let symmetric = g.table.is_symmetric();
    if !symmetric {
        failures.push("g is not symmetric".into());
    }
    let mut monotone = true;
    for i in 0..k {
        for j in 0..k {
            if (i + 1 < k && g.table.get(i, j) > g.table.get(i + 1, j))
                || (j + 1 < k && g.table.get(i, j) > g.table.get(i, j + 1))
            {
                monotone = false;
            }
        }
    }
    if !monotone {
        failures.push("g is not nondecreasing".into());
    }
    // g is constant on [v_i, v_{i+1}), so slack can only fail at u = 1
    let mut right_slack = true;
    if g.grid[k - 1].is_one() {
        for w in 0..k {
            if !g.table.get(k - 1, w).is_one() {
                right_slack = false;
                failures.push(format!("no v > 1 for g(1,{}) = {} < 1", g.grid[w], g.table.get(k - 1, w)));
            }
        }
    }
    GHypotheses {
        strong,
        weak,
        right_slack,
        symmetric,
        monotone,
        failures,
    }
}

/// A strictly increasing `f ≤ id` on the dyadics `k/2^N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DyadicF {
    pub level: u32,
    /// `values[k] = f(k/2^N)`.
    pub values: Vec<Rational>,
}

impl DyadicF {
    pub fn point(&self, k: usize) -> Rational {
        Rational::from_integer(k.into()) * dyadic_unit(self.level)
    }

    pub fn identity(level: u32) -> Self {
        let size = (1usize << level) + 1;
        let mut f = DyadicF {
            level,
            values: Vec::with_capacity(size),
        };
        for k in 0..size {
            let p = f.point(k);
            f.values.push(p);
        }
        f
    }

    /// Checks the three required properties exhaustively; returns the first
    /// failing triple for the sum condition.
    pub fn verify(&self, g: &StepFunction2D) -> Result<(), String> {
        let size = self.values.len();
        if !self.values[0].is_zero() {
            return Err("f(0) ≠ 0".into());
        }
        for k in 0..size {
            if self.values[k] > self.point(k) {
                return Err(format!("f({}) > {}", format_rational(&self.point(k)), format_rational(&self.point(k))));
            }
            if k > 0 && self.values[k] <= self.values[k - 1] {
                return Err(format!("f not strictly increasing at {}", format_rational(&self.point(k))));
            }
        }
        for a in 1..size {
            for b in a..size - a {
                if g.eval(&self.values[a], &self.values[b]) >= &self.values[a + b] {
                    return Err(format!(
                        "g(f({}), f({})) ≥ f({})",
                        format_rational(&self.point(a)),
                        format_rational(&self.point(b)),
                        format_rational(&self.point(a + b))
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Picks a point of `(lo, hi) ∩ (−∞, cap]` off the grid of `g`, in the highest
/// open cell between grid values that meets the interval. Sitting exactly on a
/// grid value raises `g` without loosening any constraint, so it is avoided.
fn choose_in_cell(grid: &[TruthValue], lo: &Rational, hi: &Rational, cap: &Rational) -> Rational {
    let on_grid = |v: &Rational| grid.iter().any(|g| g.value() == v);
    let top = if cap < hi { cap.clone() } else { hi.clone() };
    // largest grid value strictly below top
    let below = grid.iter().rev().map(|v| v.value()).find(|v| *v < &top).cloned().unwrap_or_else(Rational::zero);
    let floor = if &below > lo { below } else { lo.clone() };
    if cap < hi && !on_grid(cap) {
        return cap.clone();
    }
    (floor + top) / int(2)
}

/// Greedy level-by-level construction of `f` at level `level`.
///
/// At each new point `t` the admissible values form an open interval:
/// above `f(prev)` and every `g(f(a), f(b))` with `a + b = t`, below
/// `f(next)` and below the least grid value that would break
/// `g(f(t), f(u)) < f(t + u)` for assigned `u`. The choice is `t` itself
/// when admissible and off the grid, otherwise see [`choose_in_cell`].
pub fn build_dyadic_f(g: &StepFunction2D, level: u32) -> Result<DyadicF, ForgeError> {
    let size = (1usize << level) + 1;
    let top = size - 1;
    let mut f: Vec<Option<Rational>> = vec![None; size];
    f[0] = Some(Rational::zero());
    f[top] = Some(Rational::one());
    let unit = dyadic_unit(level);
    let label = |k: usize| format_rational(&(Rational::from_integer(k.into()) * &unit));
    let infeasible = |t: usize, u: usize, sum: usize| ForgeError::Infeasible {
        level,
        t: label(t),
        u: label(u),
        sum: label(sum),
    };

    for n in 1..=level {
        let step = 1usize << (level - n);
        for k in (1..(1usize << n)).step_by(2) {
            let t = k * step;
            let cap = Rational::from_integer(t.into()) * &unit;
            let mut lo = f[t - step].clone().expect("coarser level assigned");
            let mut lo_src = (t - step, 0, t);
            for a in 1..t {
                if let (Some(fa), Some(fb)) = (&f[a], &f[t - a]) {
                    let v = g.eval(fa, fb).value();
                    if v >= &lo {
                        lo = v.clone();
                        lo_src = (a, t - a, t);
                    }
                }
            }
            let mut hi = f[t + step].clone().expect("coarser level assigned");
            let mut hi_src = (t, 0, t + step);
            for u in 1..=(top - t) {
                let fu = if u == t {
                    None
                } else {
                    match &f[u] {
                        Some(v) => Some(v.clone()),
                        None => continue,
                    }
                };
                let Some(fsum) = &f[t + u] else { continue };
                // least grid index j making the constraint fail
                let blocked = (0..g.grid.len()).find(|&j| {
                    let col = match &fu {
                        Some(v) => g.floor_index(v),
                        None => j,
                    };
                    g.table.get(j, col).value() >= fsum
                });
                if let Some(j) = blocked {
                    if j == 0 {
                        return Err(infeasible(t, u, t + u));
                    }
                    let bound = g.grid[j].value();
                    if bound < &hi {
                        hi = bound.clone();
                        hi_src = (t, u, t + u);
                    }
                }
            }
            if lo >= cap || lo >= hi {
                let (a, b, s) = if lo >= cap { lo_src } else { hi_src };
                return Err(infeasible(a, b, s));
            }
            f[t] = Some(choose_in_cell(&g.grid, &lo, &hi, &cap));
        }
    }
    let out = DyadicF {
        level,
        values: f.into_iter().map(|v| v.expect("all levels assigned")).collect(),
    };
    out.verify(g).map_err(ForgeError::Unverified)?;
    Ok(out)
}

/// `h(t) = min{u ∈ D_N : f(u) ≥ t}` (1 beyond `f(1)`), as a left-continuous step map.
pub fn weak_inverse(f: &DyadicF) -> PLMap {
    let mut points: Vec<(Rational, Rational)> =
        f.values.iter().enumerate().map(|(k, v)| (v.clone(), f.point(k))).collect();
    if !points[points.len() - 1].0.is_one() {
        points.push((Rational::one(), Rational::one()));
    }
    PLMap::new(points, Interpolation::StepLeft).expect("f strictly increasing with f ≤ id")
}

/// Piecewise-linear map through `(v, h(v))` for every value `v` of `φ`, plus `(1,1)`;
/// agrees with `h` on the values of `φ`.
pub fn linearize_on_values(h: &PLMap, values: &[TruthValue]) -> PLMap {
    let mut points: Vec<(Rational, Rational)> = values
        .iter()
        .map(|v| (v.value().clone(), h.eval(v.value())))
        .collect();
    if points.first().map(|p| !p.0.is_zero()).unwrap_or(true) {
        points.insert(0, (Rational::zero(), Rational::zero()));
    }
    if !points[points.len() - 1].0.is_one() {
        points.push((Rational::one(), Rational::one()));
    }
    PLMap::new(points, Interpolation::Linear).expect("h nondecreasing on the grid")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RepairCertificate {
    pub level: u32,
    pub mode: Interpolation,
    pub h: PLMap,
    #[serde(skip)]
    pub f: DyadicF,
    #[serde(skip)]
    pub table: Grid,
    pub h_zero_at_zero: bool,
    /// `h(t) ≥ t` at every breakpoint and every value of the input.
    pub h_dominates_identity: bool,
    pub pseudometric: bool,
    pub input_separates: bool,
    pub metric: bool,
    pub hypotheses: GHypotheses,
}

/// Dyadic resolution `2 + ⌈log₂(1/γ)⌉` for the least gap `γ` between values.
pub fn target_level(g: &StepFunction2D) -> u32 {
    let mut vals: Vec<Rational> = g.grid.iter().map(|v| v.value().clone()).collect();
    if !vals.last().map(|v| v.is_one()).unwrap_or(false) {
        vals.push(Rational::one());
    }
    let gap = vals.windows(2).map(|w| &w[1] - &w[0]).min();
    let Some(gap) = gap else { return 2 };
    let mut n = 0;
    while dyadic_unit(n) > gap {
        n += 1;
    }
    (n + 2).min(MAX_LEVEL)
}

/// `φ ↦ h∘φ`: computes `g`, builds `f` at successively finer levels up to
/// [`target_level`] (keeping the finest success), inverts it and verifies
/// the composite exhaustively.
pub fn repair_pseudometric(labels: &[String], phi: &Grid, mode: Interpolation) -> Result<RepairCertificate, ForgeError> {
    check_symmetric_reflexive(labels, phi)?;
    let g = compute_g(phi);
    let hypotheses = check_g_hypotheses(&g);
    let target = target_level(&g);
    let mut best = None;
    let mut first_err = None;
    for level in 1..=target {
        match build_dyadic_f(&g, level) {
            Ok(f) => best = Some(f),
            Err(e) => {
                first_err = Some(e);
                break;
            }
        }
    }
    let f = match best {
        Some(f) => f,
        None => return Err(first_err.expect("at least one level tried")),
    };
    let step = weak_inverse(&f);
    let h = match mode {
        Interpolation::Linear => linearize_on_values(&step, &g.grid),
        _ => step,
    };
    let n = labels.len();
    let table = Grid::from_fn(n, n, |i, j| {
        TruthValue::new(h.eval(phi.get(i, j).value())).expect("h maps into [0,1]")
    });
    let repaired = table.to_metric_table(labels.to_vec());
    let violations = repaired.violations(false);
    if let Some(v) = violations.first() {
        return Err(ForgeError::Unverified(format!("{v:?}")));
    }
    let mut probes: Vec<Rational> = g.grid.iter().map(|v| v.value().clone()).collect();
    if let Some(pts) = h.points() {
        probes.extend(pts.iter().map(|p| p.0.clone()));
    }
    let h_dominates_identity = probes.iter().all(|t| &h.eval(t) >= t);
    let input_separates = (0..n).all(|i| (0..n).all(|j| i == j || !phi.get(i, j).is_zero()));
    let metric = repaired.separates_points();
    if input_separates && !metric {
        return Err(ForgeError::Unverified("separating input produced a non-metric".into()));
    }
    Ok(RepairCertificate {
        level: f.level,
        mode,
        h_zero_at_zero: h.is_zero_at_zero(),
        h,
        f,
        table,
        h_dominates_identity,
        pseudometric: true,
        input_separates,
        metric,
        hypotheses,
    })
}

/// `sup_z |φ(x,z) − φ(y,z)|`.
pub fn repair_via_sup(labels: &[String], phi: &Grid) -> Result<MetricTable, ForgeError> {
    check_symmetric_reflexive(labels, phi)?;
    let n = labels.len();
    let out = MetricTable::from_fn(labels.to_vec(), |x, y| sup_abs_diff(phi.row(x), phi.row(y), 0..n));
    if let Some(v) = out.violations(false).into_iter().next() {
        return Err(ForgeError::Unverified(format!("{v:?}")));
    }
    Ok(out)
}

fn sup_abs_diff(a: &[TruthValue], b: &[TruthValue], over: impl IntoIterator<Item = usize>) -> TruthValue {
    over.into_iter()
        .map(|z| a[z].abs_diff(&b[z]))
        .max()
        .unwrap_or_else(TruthValue::zero)
}

/// `sup_z |φ(x) ∧ d(x,z) − φ(y) ∧ d(y,z)|` with `φ = d(·, X)`: zero on `X²`
/// and positive whenever one point lies off `X`.
pub fn separator(m: &MetricTable, set: &PointSet) -> Result<MetricTable, ForgeError> {
    let n = m.len();
    let phi: Vec<TruthValue> = (0..n)
        .map(|x| dist_to_set(m, x, set).ok_or_else(|| ForgeError::Shape("X is empty".into())))
        .collect::<Result<_, _>>()?;
    Ok(MetricTable::from_fn(m.labels().to_vec(), |x, y| {
        (0..n)
            .map(|z| phi[x].meet(m.d(x, z)).abs_diff(&phi[y].meet(m.d(y, z))))
            .max()
            .unwrap_or_else(TruthValue::zero)
    }))
}

pub fn max_combine(a: &MetricTable, b: &MetricTable) -> MetricTable {
    MetricTable::from_fn(a.labels().to_vec(), |x, y| a.d(x, y).join(b.d(x, y)))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extension {
    /// `sup_{z∈X} |ψ1(x,z) − ψ1(y,z)|`.
    pub pseudometric: MetricTable,
    /// Combined with the separator when `d1` is a metric on `X`.
    pub metric: Option<MetricTable>,
}

/// Extends a (pseudo-)metric given on `X` to the whole universe.
///
/// `d1` is indexed by the positions of `X` in increasing order.
pub fn extend_partial_metric(
    m: &MetricTable,
    set: &PointSet,
    d1: &Grid,
    psi1: &Grid,
) -> Result<Extension, ForgeError> {
    let n = m.len();
    let xs: Vec<usize> = set.iter().copied().collect();
    if d1.rows() != xs.len() || d1.cols() != xs.len() || psi1.rows() != n || psi1.cols() != n {
        return Err(ForgeError::Shape("d1 must be |X|×|X| and ψ1 must be total".into()));
    }
    let sub_labels: Vec<String> = xs.iter().map(|&x| m.label(x).to_string()).collect();
    let d1_table = d1.to_metric_table(sub_labels);
    if let Some(v) = d1_table.violations(false).into_iter().next() {
        return Err(ForgeError::NotPseudometric(v));
    }
    for (a, &x) in xs.iter().enumerate() {
        for (b, &y) in xs.iter().enumerate() {
            if psi1.get(x, y) != d1.get(a, b) {
                return Err(ForgeError::Disagrees(m.label(x).into(), m.label(y).into()));
            }
        }
    }
    let d2 = MetricTable::from_fn(m.labels().to_vec(), |x, y| {
        sup_abs_diff(psi1.row(x), psi1.row(y), xs.iter().copied())
    });
    if let Some(v) = d2.violations(false).into_iter().next() {
        return Err(ForgeError::Unverified(format!("{v:?}")));
    }
    let metric = if d1_table.separates_points() {
        let d3 = max_combine(&d2, &separator(m, set)?);
        if let Some(v) = d3.violations(true).into_iter().next() {
            return Err(ForgeError::Unverified(format!("{v:?}")));
        }
        Some(d3)
    } else {
        None
    };
    for (a, &x) in xs.iter().enumerate() {
        for (b, &y) in xs.iter().enumerate() {
            let agrees = d2.d(x, y) == d1.get(a, b) && metric.as_ref().is_none_or(|d3| d3.d(x, y) == d1.get(a, b));
            if !agrees {
                return Err(ForgeError::Unverified("extension does not restrict to d1".into()));
            }
        }
    }
    Ok(Extension { pseudometric: d2, metric })
}

/// `d_{2,n}(x,y) = sup_z |φ_n(z) ∧ ψ1(x,z) − φ_n(z) ∧ ψ1(y,z)|` with
/// `φ_n = 1 ∸ 2ⁿφ`.
pub fn approximating_pseudometric(
    labels: &[String],
    set: &PointSet,
    psi1: &Grid,
    phi: &[TruthValue],
    n: u32,
) -> Result<MetricTable, ForgeError> {
    if &zero_set(phi) != set {
        return Err(ForgeError::ZeroSetMismatch);
    }
    let size = labels.len();
    let scale = Rational::from_integer(num_bigint::BigInt::one() << n as usize);
    let phin: Vec<TruthValue> = phi.iter().map(|v| TruthValue::one().monus(&v.scale(&scale))).collect();
    Ok(MetricTable::from_fn(labels.to_vec(), |x, y| {
        (0..size)
            .map(|z| phin[z].meet(psi1.get(x, z)).abs_diff(&phin[z].meet(psi1.get(y, z))))
            .max()
            .unwrap_or_else(TruthValue::zero)
    }))
}

/// Least `n` with `2ⁿ · min{φ > 0} ≥ 1`; from there on `d_{2,n}` is constant.
pub fn stabilization_index(phi: &[TruthValue]) -> u32 {
    let Some(least) = phi.iter().filter(|v| !v.is_zero()).min() else { return 0 };
    let mut n = 0;
    while dyadic_unit(n) > *least.value() {
        n += 1;
    }
    n
}

/// Moduli `(Δ₁₂, Δ₂₁)`: `d2 < Δ₁₂(ε) ⇒ d1 < ε`, each the largest such step map.
pub fn uniform_equivalence_modulus(d1: &MetricTable, d2: &MetricTable) -> Result<(PLMap, PLMap), ForgeError> {
    for d in [d1, d2] {
        if let Some(v) = d.violations(true).into_iter().next() {
            return Err(ForgeError::NotMetric(v));
        }
    }
    if d1.len() != d2.len() {
        return Err(ForgeError::Shape("metrics on different sets".into()));
    }
    Ok((one_sided_modulus(d1, d2), one_sided_modulus(d2, d1)))
}

/// `ε ↦ min{d2(x,y) : d1(x,y) ≥ ε}` (1 when no pair qualifies).
fn one_sided_modulus(d1: &MetricTable, d2: &MetricTable) -> PLMap {
    let n = d1.len();
    let mut points = vec![(Rational::zero(), Rational::zero())];
    for e in d1.positive_values() {
        let least = (0..n)
            .flat_map(|x| (0..n).map(move |y| (x, y)))
            .filter(|&(x, y)| d1.d(x, y) >= &e)
            .map(|(x, y)| d2.d(x, y).clone())
            .min()
            .expect("e is attained");
        points.push((e.into_inner(), least.into_inner()));
    }
    if !points[points.len() - 1].0.is_one() {
        points.push((Rational::one(), Rational::one()));
    }
    PLMap::new(points, Interpolation::StepLeft).expect("thresholds increase and minima grow")
}

/// Makes `d1` the distinguished metric and keeps the old one as predicate `d2`;
/// every modulus is recomputed against `d1`.
pub fn swap_metric(m: &FiniteStructure, d1: &MetricTable) -> Result<FiniteStructure, ForgeError> {
    const DEMOTED: &str = "d2";
    if let Some(v) = d1.violations(true).into_iter().next() {
        return Err(ForgeError::NotMetric(v));
    }
    if d1.len() != m.size() {
        return Err(ForgeError::Shape("d1 must cover the universe".into()));
    }
    if m.predicates.contains_key(DEMOTED) || m.functions.contains_key(DEMOTED) || m.constants.contains_key(DEMOTED) {
        return Err(ForgeError::NameClash(DEMOTED.into()));
    }
    let n = m.size();
    let new_metric = MetricTable::new(m.universe().to_vec(), (0..n * n).map(|k| d1.d(k / n, k % n).clone()).collect());
    let mut out = FiniteStructure::new(new_metric.clone());
    out.constants = m.constants.clone();
    let old = &m.metric;
    let mut predicates = m.predicates.clone();
    predicates.insert(
        DEMOTED.to_string(),
        PredicateTable {
            arity: 2,
            values: (0..n * n).map(|k| old.d(k / n, k % n).clone()).collect(),
            modulus: PLMap::zero(),
        },
    );
    for (name, p) in predicates.iter_mut() {
        let vals = p.values.clone();
        p.modulus = realized_modulus_by(&new_metric, p.arity, |a, b| {
            vals[crate::metric::tuple_index(n, a)].abs_diff(&vals[crate::metric::tuple_index(n, b)])
        });
        if !p.modulus.is_zero_at_zero() {
            return Err(ForgeError::NotContinuous { symbol: name.clone() });
        }
    }
    let mut functions = m.functions.clone();
    for (name, f) in functions.iter_mut() {
        let vals = f.values.clone();
        f.modulus = realized_modulus_by(&new_metric, f.arity, |a, b| {
            new_metric
                .d(vals[crate::metric::tuple_index(n, a)], vals[crate::metric::tuple_index(n, b)])
                .clone()
        });
        if !f.modulus.is_zero_at_zero() {
            return Err(ForgeError::NotContinuous { symbol: name.clone() });
        }
    }
    out.predicates = predicates;
    out.functions = functions;
    debug_assert!(!out.predicates.contains_key(METRIC_SYMBOL));
    Ok(out)
}
