//! Zero sets, distance predicates and the constructions around partial
//! predicates and functions.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::metric::{all_tuples, dist_to_set, tuple_index, Grid, MetricTable, PointSet};
use crate::plmap::PLMap;
use crate::rational::{dyadic_unit, format_rational, int, ratio, Rational, TruthValue};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DefinableError {
    #[error("distance to empty set undefined")]
    EmptySet,
    #[error("arity mismatch: {0}")]
    Arity(String),
    #[error("table has {found} entries, expected {expected}")]
    TableSize { found: usize, expected: usize },
    #[error("predicate is not a certified distance predicate (margins {d1}, {d2})")]
    NotCertified { d1: TruthValue, d2: TruthValue },
    #[error("ε must be positive")]
    NonPositiveEpsilon,
    #[error("hypothesis fails at `{point}`: φ = 0 but ψ = {psi}")]
    ImplicationHypothesis { point: String, psi: TruthValue },
    #[error("modulus violated on the domain at ({x}, {y}): |{fx} - {fy}| > {bound}")]
    ModulusViolated {
        x: String,
        y: String,
        fx: TruthValue,
        fy: TruthValue,
        bound: String,
    },
    #[error("φ₀ disagrees with the graph of f at ({x}, {z})")]
    GraphMismatch { x: String, z: String },
    #[error("internal consistency failure: {0}")]
    Internal(String),
}

fn check_len(table: &[TruthValue], m: &MetricTable) -> Result<(), DefinableError> {
    if table.len() != m.len() {
        return Err(DefinableError::TableSize {
            found: table.len(),
            expected: m.len(),
        });
    }
    Ok(())
}

pub fn zero_set(table: &[TruthValue]) -> PointSet {
    table
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_zero())
        .map(|(i, _)| i)
        .collect()
}

pub fn distance_to_set(m: &MetricTable, x: usize, set: &PointSet) -> Result<TruthValue, DefinableError> {
    dist_to_set(m, x, set).ok_or(DefinableError::EmptySet)
}

/// `d(·, X)` as a table.
pub fn distance_table(m: &MetricTable, set: &PointSet) -> Result<Vec<TruthValue>, DefinableError> {
    (0..m.len()).map(|x| distance_to_set(m, x, set)).collect()
}

/// `d(x, X ∪ Y) = d(x, X) ∧ d(x, Y)`.
pub fn union_distance(m: &MetricTable, a: &PointSet, b: &PointSet) -> Result<Vec<TruthValue>, DefinableError> {
    let da = distance_table(m, a)?;
    let db = distance_table(m, b)?;
    Ok(da.iter().zip(&db).map(|(x, y)| x.meet(y)).collect())
}

/// Distance to `X × Y` on `M^(k1+k2)` with the maximum metric, where `X` is
/// a set of `k1`-tuples and `Y` of `k2`-tuples (indexed as in [`tuple_index`]).
pub fn product_distance(
    m: &MetricTable,
    x: &PointSet,
    k1: usize,
    y: &PointSet,
    k2: usize,
) -> Result<Vec<TruthValue>, DefinableError> {
    let n = m.len();
    let (p1, _) = m.power(k1);
    let (p2, _) = m.power(k2);
    for (set, p, k) in [(x, &p1, k1), (y, &p2, k2)] {
        if set.iter().any(|&i| i >= p.len()) {
            return Err(DefinableError::Arity(format!("set element outside M^{k}")));
        }
    }
    let dx = distance_table(&p1, x)?;
    let dy = distance_table(&p2, y)?;
    Ok(all_tuples(n, k1 + k2)
        .iter()
        .map(|t| {
            let i = tuple_index(n, &t[..k1]);
            let j = tuple_index(n, &t[k1..]);
            dx[i].join(&dy[j])
        })
        .collect())
}

/// `inf_{y∈Y} φ(x, y)` for a table with `x` along rows and `y` along columns.
pub fn parametric_union(phi: &Grid, params: &PointSet) -> Result<Vec<TruthValue>, DefinableError> {
    if params.is_empty() {
        return Err(DefinableError::EmptySet);
    }
    if params.iter().any(|&y| y >= phi.cols()) {
        return Err(DefinableError::Arity("parameter outside the table".into()));
    }
    Ok((0..phi.rows())
        .map(|x| params.iter().map(|&y| phi.get(x, y).clone()).min().expect("nonempty"))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CertificateWitness {
    pub condition: &'static str,
    pub points: Vec<String>,
    pub value: TruthValue,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DistanceCertificate {
    pub verdict: Verdict,
    pub d1_margin: TruthValue,
    pub d2_margin: TruthValue,
    pub witnesses: Vec<CertificateWitness>,
}

/// Decides whether `psi` is the distance to its own zero set.
///
/// `d1 = sup_{x,y} ψx ∸ ψy ∸ d(x,y)`, `d2 = sup_x inf_y ψy ∨ (d(x,y) ∸ ψx)`.
/// Passing is checked against a direct comparison with `d(·, Z(ψ))`.
pub fn certify_distance_predicate(
    m: &MetricTable,
    psi: &[TruthValue],
) -> Result<DistanceCertificate, DefinableError> {
    check_len(psi, m)?;
    let n = m.len();
    let mut witnesses = Vec::new();
    let mut d1 = TruthValue::zero();
    for x in 0..n {
        for y in 0..n {
            let v = psi[x].monus(&psi[y]).monus(m.d(x, y));
            if !v.is_zero() {
                witnesses.push(CertificateWitness {
                    condition: "D1",
                    points: vec![m.label(x).to_string(), m.label(y).to_string()],
                    value: v.clone(),
                });
            }
            d1 = d1.join(&v);
        }
    }
    let mut d2 = TruthValue::zero();
    for x in 0..n {
        let v = (0..n)
            .map(|y| psi[y].join(&m.d(x, y).monus(&psi[x])))
            .min()
            .unwrap_or_else(TruthValue::one);
        if !v.is_zero() {
            witnesses.push(CertificateWitness {
                condition: "D2",
                points: vec![m.label(x).to_string()],
                value: v.clone(),
            });
        }
        d2 = d2.join(&v);
    }
    let verdict = Verdict::from_bool(d1.is_zero() && d2.is_zero());

    let zeros = zero_set(psi);
    let matches = !zeros.is_empty() && distance_table(m, &zeros)? == psi;
    if verdict.passed() != matches {
        return Err(DefinableError::Internal(format!(
            "D1/D2 verdict {verdict:?} disagrees with direct comparison to d(·, Z(ψ))"
        )));
    }
    Ok(DistanceCertificate {
        verdict,
        d1_margin: d1,
        d2_margin: d2,
        witnesses,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProjectionStep {
    pub from: String,
    pub to: String,
    pub gap: TruthValue,
    /// `ψ(a_n) + 2^{-n-1}ε`, strict upper bound for the gap.
    pub gap_bound: String,
    pub psi_next: TruthValue,
    /// `2^{-n-1}ε`, strict upper bound for `ψ(a_{n+1})`.
    pub psi_bound: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Projection {
    pub target: usize,
    pub target_label: String,
    pub distance: TruthValue,
    /// `ψ(x) + 4ε`.
    pub bound: String,
    pub trace: Vec<String>,
    pub steps: Vec<ProjectionStep>,
}

/// Follows the iteration `a_0 = x`, `a_{n+1}` with `ψ(a_{n+1}) < 2^{-n-1}ε`
/// and `d(a_n, a_{n+1}) < ψ(a_n) + 2^{-n-1}ε`, choosing at each step the
/// admissible point of least `ψ`, then least distance, then least index.
pub fn project_to_zero_set(
    m: &MetricTable,
    psi: &[TruthValue],
    x: usize,
    eps: &Rational,
) -> Result<Projection, DefinableError> {
    if eps <= &Rational::zero() {
        return Err(DefinableError::NonPositiveEpsilon);
    }
    let cert = certify_distance_predicate(m, psi)?;
    if !cert.verdict.passed() {
        return Err(DefinableError::NotCertified {
            d1: cert.d1_margin,
            d2: cert.d2_margin,
        });
    }
    let n = m.len();
    let mut current = x;
    let mut trace = vec![m.label(x).to_string()];
    let mut steps = Vec::new();
    let mut level = 0u32;
    while !psi[current].is_zero() {
        let slack = eps * dyadic_unit(level + 1);
        let gap_bound = psi[current].value() + &slack;
        let next = (0..n)
            .filter(|&y| psi[y].value() < &slack && m.d(current, y).value() < &gap_bound)
            .min_by(|&a, &b| {
                (&psi[a], m.d(current, a), a).cmp(&(&psi[b], m.d(current, b), b))
            })
            .ok_or_else(|| DefinableError::Internal("no admissible successor".into()))?;
        steps.push(ProjectionStep {
            from: m.label(current).to_string(),
            to: m.label(next).to_string(),
            gap: m.d(current, next).clone(),
            gap_bound: format_rational(&gap_bound),
            psi_next: psi[next].clone(),
            psi_bound: format_rational(&slack),
        });
        trace.push(m.label(next).to_string());
        current = next;
        level += 1;
        if level as usize > n + 64 {
            return Err(DefinableError::Internal("projection did not terminate".into()));
        }
    }
    let bound = psi[x].value() + int(4) * eps;
    let distance = m.d(x, current).clone();
    if distance.value() > &bound {
        return Err(DefinableError::Internal("projection exceeded ψ(x) + 4ε".into()));
    }
    Ok(Projection {
        target: current,
        target_label: m.label(current).to_string(),
        distance,
        bound: format_rational(&bound),
        trace,
        steps,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RelativizedAudit {
    pub delta: TruthValue,
    #[serde(with = "crate::rational::serde_q")]
    pub k: Rational,
    /// `sup_{x∈X} φ(x, y)` per `y`.
    pub restricted: Vec<TruthValue>,
    /// `sup_x ζ(x, y)` per `y`.
    pub relaxed: Vec<TruthValue>,
    pub sandwich_holds: bool,
}

/// The relaxation `ζ(x,y) = φ(x,y) ∸ min(1, k·d(x,X))` whose unrestricted
/// sup approximates the sup over `X` within `ε`.
///
/// `φ` has `x` along rows. `δ` is the least distance `d(x,x')` at which some
/// column of `φ` varies by more than `ε` (1 if none); `k = ⌊1/δ⌋ + 1`.
pub fn relativized_sup(
    m: &MetricTable,
    phi: &Grid,
    set: &PointSet,
    eps: &Rational,
) -> Result<(Grid, RelativizedAudit), DefinableError> {
    if eps <= &Rational::zero() {
        return Err(DefinableError::NonPositiveEpsilon);
    }
    if set.is_empty() {
        return Err(DefinableError::EmptySet);
    }
    if phi.rows() != m.len() {
        return Err(DefinableError::Arity("φ rows must range over the universe".into()));
    }
    let n = m.len();
    let mut delta = TruthValue::one();
    for x in 0..n {
        for x2 in (x + 1)..n {
            let varies = (0..phi.cols()).any(|y| phi.get(x, y).abs_diff(phi.get(x2, y)).value() > eps);
            if varies && m.d(x, x2) < &delta {
                delta = m.d(x, x2).clone();
            }
        }
    }
    if delta.is_zero() {
        return Err(DefinableError::Internal("φ is not uniformly continuous: δ = 0".into()));
    }
    let k = (Rational::one() / delta.value()).floor() + Rational::one();
    let dist = distance_table(m, set)?;
    let cut: Vec<TruthValue> = dist.iter().map(|v| v.scale(&k)).collect();
    let zeta = Grid::from_fn(n, phi.cols(), |x, y| phi.get(x, y).monus(&cut[x]));
    let restricted: Vec<TruthValue> = (0..phi.cols())
        .map(|y| set.iter().map(|&x| phi.get(x, y).clone()).max().expect("nonempty"))
        .collect();
    let relaxed: Vec<TruthValue> = (0..phi.cols())
        .map(|y| (0..n).map(|x| zeta.get(x, y).clone()).max().unwrap_or_else(TruthValue::zero))
        .collect();
    let sandwich_holds = restricted
        .iter()
        .zip(&relaxed)
        .all(|(lo, mid)| lo <= mid && mid.value() <= &(lo.value() + eps));
    Ok((
        zeta,
        RelativizedAudit {
            delta,
            k,
            restricted,
            relaxed,
            sandwich_holds,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ImplicationReport {
    pub chi: Vec<TruthValue>,
    /// `(2^{-n}, δ(2^{-n}))` for the explicitly summed prefix.
    pub delta_prefix: Vec<(String, TruthValue)>,
    pub delta_limit: TruthValue,
    pub prefix_terms: usize,
    pub vanishes_on_set: bool,
    pub implication_holds: bool,
}

/// `δ(ε) = min{φ(x) : x ∈ X, ψ(x) > ε}`, or 1.
pub fn implication_delta(phi: &[TruthValue], psi: &[TruthValue], set: &PointSet, eps: &Rational) -> TruthValue {
    set.iter()
        .filter(|&&x| psi[x].value() > eps)
        .map(|&x| phi[x].clone())
        .min()
        .unwrap_or_else(TruthValue::one)
}

/// `χ(x) = Σ_n 2^{-n-1} ((δ(2^{-n}) ∸ φ(x)) ∧ (ψ(x) ∸ 2^{-n}))`, summed
/// exactly: an explicit prefix followed by a geometric tail in closed form.
pub fn implication_zero_set(
    labels: &[String],
    phi: &[TruthValue],
    psi: &[TruthValue],
    set: &PointSet,
) -> Result<ImplicationReport, DefinableError> {
    if phi.len() != psi.len() || phi.len() != labels.len() {
        return Err(DefinableError::TableSize {
            found: psi.len(),
            expected: phi.len(),
        });
    }
    for &x in set {
        if phi[x].is_zero() && !psi[x].is_zero() {
            return Err(DefinableError::ImplicationHypothesis {
                point: labels[x].clone(),
                psi: psi[x].clone(),
            });
        }
    }
    let delta_limit = implication_delta(phi, psi, set, &Rational::zero());
    // δ(2^{-n}) is constant once 2^{-n} drops below every positive ψ on X
    let min_pos_on_set = set.iter().filter(|&&x| !psi[x].is_zero()).map(|&x| psi[x].value().clone()).min();
    let mut prefix = level_below(min_pos_on_set.as_ref());

    let mut regimes = Vec::with_capacity(phi.len());
    for x in 0..phi.len() {
        let a = delta_limit.monus(&phi[x]);
        let p = psi[x].value().clone();
        let need = if a.is_zero() || p.is_zero() {
            0
        } else if a.value() < &p {
            level_at_most(&(&p - a.value()))
        } else {
            level_at_most(&p)
        };
        prefix = prefix.max(need);
        regimes.push(a);
    }

    let mut delta_prefix = Vec::new();
    for n in 0..prefix {
        let e = dyadic_unit(n);
        delta_prefix.push((format_rational(&e), implication_delta(phi, psi, set, &e)));
    }
    let tail_weight = dyadic_unit(prefix);
    let chi: Vec<TruthValue> = (0..phi.len())
        .map(|x| {
            let mut sum = Rational::zero();
            for (n, (e, delta)) in delta_prefix.iter().enumerate() {
                let e = crate::rational::parse_rational(e).expect("own output");
                let term = delta.monus(&phi[x]).meet(&TruthValue::clamp(psi[x].value() - e));
                sum += dyadic_unit(n as u32 + 1) * term.value();
            }
            let a = &regimes[x];
            let p = psi[x].value();
            if !a.is_zero() && !p.is_zero() {
                sum += if a.value() < p {
                    a.value() * &tail_weight
                } else {
                    p * &tail_weight - ratio(2, 3) * &tail_weight * &tail_weight
                };
            }
            TruthValue::new(sum).expect("series of weights summing to 1")
        })
        .collect();

    let vanishes_on_set = set.iter().all(|&x| chi[x].is_zero());
    let implication_holds = (0..phi.len()).all(|x| !(chi[x].is_zero() && phi[x].is_zero()) || psi[x].is_zero());
    Ok(ImplicationReport {
        chi,
        delta_prefix,
        delta_limit,
        prefix_terms: prefix as usize,
        vanishes_on_set,
        implication_holds,
    })
}

/// Least `N` with `2^{-N} < q`, or 0 when `q` is absent.
fn level_below(q: Option<&Rational>) -> u32 {
    let Some(q) = q else { return 0 };
    let mut n = 0;
    while &dyadic_unit(n) >= q {
        n += 1;
    }
    n
}

/// Least `N` with `2^{-N} ≤ q` (`q > 0`).
fn level_at_most(q: &Rational) -> u32 {
    let mut n = 0;
    while &dyadic_unit(n) > q {
        n += 1;
    }
    n
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialPredicate {
    pub values: BTreeMap<usize, TruthValue>,
    pub modulus: PLMap,
}

/// `f̂(x) = min(1, min_{y∈dom} f(y) + Δ(d(x,y)))`.
pub fn extend_partial_predicate(m: &MetricTable, f: &PartialPredicate) -> Result<Vec<TruthValue>, DefinableError> {
    if f.values.is_empty() {
        return Err(DefinableError::EmptySet);
    }
    for (&y, fy) in &f.values {
        for (&y2, fy2) in &f.values {
            let bound = f.modulus.eval(m.d(y, y2).value());
            if fy.abs_diff(fy2).value() > &bound {
                return Err(DefinableError::ModulusViolated {
                    x: m.label(y).to_string(),
                    y: m.label(y2).to_string(),
                    fx: fy.clone(),
                    fy: fy2.clone(),
                    bound: format_rational(&bound),
                });
            }
        }
    }
    Ok((0..m.len())
        .map(|x| {
            f.values
                .iter()
                .map(|(&y, fy)| TruthValue::clamp(fy.value() + f.modulus.eval(m.d(x, y).value())))
                .min()
                .expect("nonempty domain")
        })
        .collect())
}

/// `φ(x,y) = φ₀(x,y) ∸ inf_z φ₀(x,z)`, row by row.
pub fn normalize_graph_predicate(phi0: &Grid) -> Grid {
    let minima: Vec<TruthValue> = (0..phi0.rows())
        .map(|x| phi0.row(x).iter().min().cloned().unwrap_or_else(TruthValue::zero))
        .collect();
    Grid::from_fn(phi0.rows(), phi0.cols(), |x, y| phi0.get(x, y).monus(&minima[x]))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EmbedAudit {
    pub graph_sandwich: bool,
    pub theta_isometric: bool,
    pub extends_graph: bool,
    pub represents_phi: bool,
    pub violations: Vec<String>,
}

impl EmbedAudit {
    pub fn passed(&self) -> bool {
        self.graph_sandwich && self.theta_isometric && self.extends_graph && self.represents_phi
    }
}

/// The function-space sort and maps produced by [`canonical_embed`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Embedding {
    /// Elements of the new sort, each a map `z ↦ value` over the universe.
    pub sort: Vec<Vec<TruthValue>>,
    pub sort_metric: MetricTable,
    pub theta: Vec<usize>,
    pub f_hat: Vec<usize>,
    /// `φ(x,y) = sup_z |φ₀(x,z) − d(z,y)|`.
    pub phi: Grid,
    pub audit: EmbedAudit,
}

/// Realises a partial function `f: X → M` as a total map into a sort of
/// `[0,1]`-valued functions, with `θ(y) = d(y,·)` and `f̂(x) = φ₀(x,·)`.
/// The selector takes both values 0 and 1, so the sort consists of every
/// row of `φ₀` and every row of `d`.
pub fn canonical_embed(
    m: &MetricTable,
    f: &BTreeMap<usize, usize>,
    phi0: &Grid,
) -> Result<Embedding, DefinableError> {
    let n = m.len();
    if phi0.rows() != n || phi0.cols() != n {
        return Err(DefinableError::Arity("φ₀ must be a universe × universe table".into()));
    }
    for (&x, &fx) in f {
        for z in 0..n {
            if phi0.get(x, z) != m.d(fx, z) {
                return Err(DefinableError::GraphMismatch {
                    x: m.label(x).to_string(),
                    z: m.label(z).to_string(),
                });
            }
        }
    }
    let mut sort: Vec<Vec<TruthValue>> = Vec::new();
    let mut intern = |row: Vec<TruthValue>| -> usize {
        if let Some(i) = sort.iter().position(|r| r == &row) {
            i
        } else {
            sort.push(row);
            sort.len() - 1
        }
    };
    let theta: Vec<usize> = (0..n).map(|y| intern(m.row(y).to_vec())).collect();
    let f_hat: Vec<usize> = (0..n).map(|x| intern(phi0.row(x).to_vec())).collect();
    let sup_diff = |a: &[TruthValue], b: &[TruthValue]| -> TruthValue {
        a.iter().zip(b).map(|(u, v)| u.abs_diff(v)).max().unwrap_or_else(TruthValue::zero)
    };
    let labels: Vec<String> = (0..sort.len()).map(|i| format!("s{i}")).collect();
    let sort_metric = MetricTable::from_fn(labels, |i, j| sup_diff(&sort[i], &sort[j]));
    let phi = Grid::from_fn(n, n, |x, y| sup_diff(phi0.row(x), m.row(y)));

    let mut violations = Vec::new();
    let mut graph_sandwich = true;
    for x in 0..n {
        for y in 0..n {
            for y2 in 0..n {
                let lhs = phi.get(x, y).value() - phi.get(x, y2).value();
                let d = m.d(y, y2).value();
                let rhs = phi.get(x, y).value() + phi.get(x, y2).value();
                if &lhs > d || d > &rhs {
                    graph_sandwich = false;
                    violations.push(format!("graph sandwich at ({}, {}, {})", m.label(x), m.label(y), m.label(y2)));
                }
            }
        }
    }
    let mut theta_isometric = true;
    for y in 0..n {
        for y2 in 0..n {
            if sort_metric.d(theta[y], theta[y2]) != m.d(y, y2) {
                theta_isometric = false;
                violations.push(format!("theta at ({}, {})", m.label(y), m.label(y2)));
            }
        }
    }
    let extends_graph = f.iter().all(|(&x, &fx)| f_hat[x] == theta[fx]);
    if !extends_graph {
        violations.push("f_hat differs from theta∘f on X".into());
    }
    let represents_phi = (0..n).all(|x| (0..n).all(|y| phi.get(x, y) == sort_metric.d(f_hat[x], theta[y])));
    if !represents_phi {
        violations.push("φ(x,y) differs from d(f̂(x), θ(y))".into());
    }
    Ok(Embedding {
        sort,
        sort_metric,
        theta,
        f_hat,
        phi,
        audit: EmbedAudit {
            graph_sandwich,
            theta_isometric,
            extends_graph,
            represents_phi,
            violations,
        },
    })
}

/// `φ₀` for [`canonical_embed`]: rows `d(f(x),·)` on `X` and constant 1 elsewhere.
pub fn default_graph_table(m: &MetricTable, f: &BTreeMap<usize, usize>) -> Grid {
    Grid::from_fn(m.len(), m.len(), |x, z| match f.get(&x) {
        Some(&fx) => m.d(fx, z).clone(),
        None => TruthValue::one(),
    })
}
