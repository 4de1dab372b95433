//! Descending chains of finite sets: approximate stabilization, limits and
//! uniform families.

use std::collections::BTreeSet;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::definable::{certify_distance_predicate, distance_table, zero_set, DefinableError, DistanceCertificate};
use crate::metric::{dist_to_set, MetricTable, PointSet};
use crate::rational::{dyadic_unit, format_rational, int, Rational, TruthValue};
use crate::structure::{FiniteStructure, StructureError};

#[derive(Debug, Error)]
pub enum ChainError {
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Definable(#[from] DefinableError),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("chain member {0} is empty")]
    EmptyMember(usize),
    #[error("chain is not descending: member {0} is not contained in member {1}")]
    NotDescending(usize, usize),
    #[error("the intersection of the chain is empty")]
    EmptyLimit,
    #[error("ε must be positive")]
    NonPositiveEpsilon,
    #[error("x0 = {0} is not in X_{1}")]
    StartOutside(String, usize),
    #[error("step {step}: no point of X_{target} within {bound} of {from}")]
    Step {
        step: usize,
        from: String,
        target: usize,
        bound: String,
    },
    #[error("no limit point reached within the horizon")]
    Horizon,
    #[error("family is not nondecreasing: member {index} exceeds member {next} at {point}")]
    NotMonotone { index: usize, next: usize, point: String },
    #[error("table has {found} entries, expected {expected}")]
    TableSize { found: usize, expected: usize },
    #[error("family is empty")]
    EmptyFamily,
}

/// A chain whose members are produced on demand. Members past `horizon`
/// are assumed equal to member `horizon`.
pub trait LazyChain {
    fn metric(&self) -> &MetricTable;
    fn member(&self, n: usize) -> PointSet;
    fn horizon(&self) -> usize;

    fn limit(&self) -> PointSet {
        self.member(self.horizon())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DescendingChain {
    pub structure: FiniteStructure,
    pub members: Vec<PointSet>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainFile {
    pub structure: String,
    pub chain: Vec<Vec<String>>,
}

impl DescendingChain {
    pub fn new(structure: FiniteStructure, members: Vec<PointSet>) -> Result<Self, ChainError> {
        if members.is_empty() {
            return Err(ChainError::EmptyMember(0));
        }
        for (i, m) in members.iter().enumerate() {
            if m.is_empty() {
                return Err(ChainError::EmptyMember(i));
            }
            if i > 0 && !m.is_subset(&members[i - 1]) {
                return Err(ChainError::NotDescending(i, i - 1));
            }
        }
        Ok(DescendingChain { structure, members })
    }

    /// Parses a chain file; `load` resolves the structure reference.
    pub fn from_json(text: &str, load: impl FnOnce(&str) -> Result<FiniteStructure, ChainError>) -> Result<Self, ChainError> {
        let file: ChainFile = serde_json::from_str(text)?;
        let structure = load(&file.structure)?;
        let members = file
            .chain
            .iter()
            .map(|labels| labels.iter().map(|l| structure.element(l)).collect::<Result<PointSet, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(structure, members)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

impl LazyChain for DescendingChain {
    fn metric(&self) -> &MetricTable {
        &self.structure.metric
    }

    fn member(&self, n: usize) -> PointSet {
        self.members[n.min(self.members.len() - 1)].clone()
    }

    fn horizon(&self) -> usize {
        self.members.len() - 1
    }
}

/// A chain given by a generator, scanned up to a fixed horizon.
pub struct FnChain<'a, F: Fn(usize) -> PointSet> {
    pub metric: &'a MetricTable,
    pub generate: F,
    pub horizon: usize,
}

impl<F: Fn(usize) -> PointSet> LazyChain for FnChain<'_, F> {
    fn metric(&self) -> &MetricTable {
        self.metric
    }

    fn member(&self, n: usize) -> PointSet {
        (self.generate)(n.min(self.horizon))
    }

    fn horizon(&self) -> usize {
        self.horizon
    }
}

/// `a ⊆ B(b, ε)` with open balls; returns the first point of `a` outside.
fn outside_ball(m: &MetricTable, a: &PointSet, b: &PointSet, eps: &Rational) -> Option<(usize, TruthValue)> {
    a.iter().find_map(|&x| {
        let d = dist_to_set(m, x, b).unwrap_or_else(TruthValue::one);
        (d.value() >= eps).then_some((x, d))
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StabilizationFailure {
    pub alpha: usize,
    pub beta: usize,
    pub point: String,
    pub distance: TruthValue,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Stabilization {
    pub alpha: usize,
    /// Set when only the last scanned member works.
    pub at_horizon: bool,
}

/// Least `α ≤ budget` with `X_α ⊆ B(X_β, ε)` for every `β` up to the horizon.
/// Without a budget every index up to the horizon is tried, so the scan
/// cannot fail; with one, the last rejected `α` comes back as a witness.
pub fn approx_stabilizes_lazy(c: &dyn LazyChain, eps: &Rational, budget: Option<usize>) -> Result<Stabilization, StabilizationFailure> {
    let h = c.horizon();
    let members: Vec<PointSet> = (0..=h).map(|n| c.member(n)).collect();
    let mut last_failure = None;
    for alpha in 0..=budget.unwrap_or(h).min(h) {
        let failure = (alpha..=h).find_map(|beta| {
            outside_ball(c.metric(), &members[alpha], &members[beta], eps).map(|(x, d)| StabilizationFailure {
                alpha,
                beta,
                point: c.metric().label(x).to_string(),
                distance: d,
            })
        });
        match failure {
            None => {
                return Ok(Stabilization {
                    alpha,
                    at_horizon: alpha == h && h > 0,
                })
            }
            Some(f) => last_failure = Some(f),
        }
    }
    Err(last_failure.expect("horizon scanned"))
}

pub fn approx_stabilizes(c: &DescendingChain, eps: &Rational) -> Result<Stabilization, ChainError> {
    if eps <= &Rational::zero() {
        return Err(ChainError::NonPositiveEpsilon);
    }
    Ok(approx_stabilizes_lazy(c, eps, None).expect("a finite chain is constant past its last member"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LimitEquivalence {
    /// Least `α` with `X_α ⊆ B(X_β, ε)` for all `β`.
    pub stabilizing_alpha: Option<usize>,
    /// Least `α` with `X_α ⊆ B(X, ε)`.
    pub limit_alpha: Option<usize>,
    pub equivalent: bool,
}

/// Both sides of the equivalence, each scanned on its own.
pub fn limit_equivalence(c: &dyn LazyChain, eps: &Rational) -> Result<LimitEquivalence, ChainError> {
    if eps <= &Rational::zero() {
        return Err(ChainError::NonPositiveEpsilon);
    }
    let limit = c.limit();
    if limit.is_empty() {
        return Err(ChainError::EmptyLimit);
    }
    let stabilizing_alpha = approx_stabilizes_lazy(c, eps, None).ok().map(|s| s.alpha);
    let limit_alpha = (0..=c.horizon()).find(|&a| {
        c.member(a)
            .iter()
            .all(|&x| dist_to_set(c.metric(), x, &limit).expect("nonempty").value() < eps)
    });
    Ok(LimitEquivalence {
        equivalent: stabilizing_alpha.is_some() == limit_alpha.is_some(),
        stabilizing_alpha,
        limit_alpha,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChaseStep {
    pub k: usize,
    pub point: String,
    /// Index `n_{m0+k+1}` of the member holding this point.
    pub member: usize,
    pub gap: Option<TruthValue>,
    pub bound: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Chase {
    pub limit: String,
    pub limit_index: usize,
    pub distance: TruthValue,
    pub bound: String,
    pub within_bound: bool,
    pub trace: Vec<ChaseStep>,
}

/// Builds `x_{k+1} ∈ X_{n_{m0+k+2}}` with `d(x_k, x_{k+1}) < 2^{−m0−k−1}` until
/// the sequence reaches the intersection. Prefers staying put, then the
/// nearest admissible point.
pub fn chase_limit_point(c: &dyn LazyChain, n_m: &dyn Fn(usize) -> usize, x0: usize, m0: usize) -> Result<Chase, ChainError> {
    let m = c.metric();
    let limit = c.limit();
    let start = n_m(m0 + 1);
    if !c.member(start).contains(&x0) {
        return Err(ChainError::StartOutside(m.label(x0).to_string(), start));
    }
    let mut trace = vec![ChaseStep {
        k: 0,
        point: m.label(x0).to_string(),
        member: start,
        gap: None,
        bound: None,
    }];
    let mut x = x0;
    let mut k = 0;
    // once a point lies in the limit it stays; the horizon bounds the walk
    let max_steps = c.horizon() + m.len() + 64;
    while !limit.contains(&x) {
        if k > max_steps {
            return Err(ChainError::Horizon);
        }
        let target = n_m(m0 + k + 2);
        let bound = dyadic_unit((m0 + k + 1) as u32);
        let next_set = c.member(target);
        let next = if next_set.contains(&x) {
            Some(x)
        } else {
            next_set
                .iter()
                .copied()
                .filter(|&y| m.d(x, y).value() < &bound)
                .min_by(|&a, &b| m.d(x, a).cmp(m.d(x, b)).then(a.cmp(&b)))
        };
        let Some(y) = next else {
            return Err(ChainError::Step {
                step: k,
                from: m.label(x).to_string(),
                target,
                bound: format_rational(&bound),
            });
        };
        trace.push(ChaseStep {
            k: k + 1,
            point: m.label(y).to_string(),
            member: target,
            gap: Some(m.d(x, y).clone()),
            bound: Some(format_rational(&bound)),
        });
        x = y;
        k += 1;
    }
    let bound = dyadic_unit(m0 as u32);
    let distance = m.d(x0, x).clone();
    Ok(Chase {
        limit: m.label(x).to_string(),
        limit_index: x,
        within_bound: distance.value() < &bound,
        distance,
        bound: format_rational(&bound),
        trace,
    })
}

/// Positive distances of `m` and midpoints between consecutive values (0 included).
pub fn epsilon_grid(m: &MetricTable) -> Vec<Rational> {
    let mut values: Vec<Rational> = vec![Rational::zero()];
    values.extend(m.positive_values().into_iter().map(TruthValue::into_inner));
    let mut grid: BTreeSet<Rational> = values.iter().skip(1).cloned().collect();
    for w in values.windows(2) {
        grid.insert((&w[0] + &w[1]) / int(2));
    }
    grid.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AlphaEntry {
    pub eps: String,
    pub alpha: usize,
    pub inside_limit_ball: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DefinableLimit {
    pub limit: Vec<String>,
    pub alpha_table: Vec<AlphaEntry>,
    pub distance: Vec<TruthValue>,
    pub certificate: DistanceCertificate,
    pub certified: bool,
}

/// `α_ε` over the value grid with `X_{α_ε} ⊆ B(X, ε)`, and a D1/D2 certificate for `d(·, X)`.
pub fn definable_limit(c: &DescendingChain) -> Result<DefinableLimit, ChainError> {
    let m = c.metric();
    let limit = c.limit();
    if limit.is_empty() {
        return Err(ChainError::EmptyLimit);
    }
    let mut alpha_table = Vec::new();
    for eps in epsilon_grid(m) {
        let alpha = approx_stabilizes(c, &eps)?.alpha;
        let inside_limit_ball = outside_ball(m, &c.member(alpha), &limit, &eps).is_none();
        alpha_table.push(AlphaEntry {
            eps: format_rational(&eps),
            alpha,
            inside_limit_ball,
        });
    }
    let distance = distance_table(m, &limit)?;
    let certificate = certify_distance_predicate(m, &distance)?;
    let certified = certificate.verdict.passed() && alpha_table.iter().all(|e| e.inside_limit_ball);
    Ok(DefinableLimit {
        limit: limit.iter().map(|&x| m.label(x).to_string()).collect(),
        alpha_table,
        distance,
        certificate,
        certified,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FamilyLimit {
    pub limit: Vec<TruthValue>,
    /// `sup_x (lim − φ_last)`; zero at finite length.
    pub uniform_gap: TruthValue,
    pub zero_set: Vec<String>,
    pub intersection: Vec<String>,
    pub zero_sets_agree: bool,
    /// Name of a candidate instance equal to the limit, if any.
    pub instance: Option<String>,
    /// The limit is the distance to its zero set.
    pub is_distance: bool,
    pub note: Option<String>,
}

/// Pointwise limit of a nondecreasing family of instance tables.
pub fn uniform_family_limit(
    m: &MetricTable,
    family: &[Vec<TruthValue>],
    candidates: &[(String, Vec<TruthValue>)],
) -> Result<FamilyLimit, ChainError> {
    let n = m.len();
    if family.is_empty() {
        return Err(ChainError::EmptyFamily);
    }
    for t in family.iter().chain(candidates.iter().map(|c| &c.1)) {
        if t.len() != n {
            return Err(ChainError::TableSize {
                found: t.len(),
                expected: n,
            });
        }
    }
    for (i, w) in family.windows(2).enumerate() {
        if let Some(x) = (0..n).find(|&x| w[0][x] > w[1][x]) {
            return Err(ChainError::NotMonotone {
                index: i,
                next: i + 1,
                point: m.label(x).to_string(),
            });
        }
    }
    let limit: Vec<TruthValue> = (0..n)
        .map(|x| family.iter().map(|t| t[x].clone()).max().expect("nonempty family"))
        .collect();
    let last = family.last().expect("nonempty family");
    let uniform_gap = (0..n).map(|x| limit[x].monus(&last[x])).max().unwrap_or_else(TruthValue::zero);
    let zeros = zero_set(&limit);
    let intersection = family
        .iter()
        .map(|t| zero_set(t))
        .reduce(|a, b| a.intersection(&b).copied().collect())
        .expect("nonempty family");
    let instance = candidates.iter().find(|(_, t)| t == &limit).map(|(name, _)| name.clone());
    let is_distance = !zeros.is_empty() && certify_distance_predicate(m, &limit)?.verdict.passed();
    let labels = |s: &PointSet| s.iter().map(|&x| m.label(x).to_string()).collect::<Vec<_>>();
    Ok(FamilyLimit {
        uniform_gap,
        zero_sets_agree: zeros == intersection,
        zero_set: labels(&zeros),
        intersection: labels(&intersection),
        instance,
        is_distance,
        note: is_distance.then(|| "limit equals d(·, X): the parameter can be taken to satisfy the distance axioms".to_string()),
        limit,
    })
}

/// `d(·, X)` as a family member.
pub fn distance_member(m: &MetricTable, set: &PointSet) -> Result<Vec<TruthValue>, ChainError> {
    Ok(distance_table(m, set)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rational::ratio;

    #[test]
    fn path3_chain_alphas() {
        let c = fixtures::path3_chain();
        assert_eq!(approx_stabilizes(&c, &ratio(3, 8)).unwrap().alpha, 1);
        assert_eq!(approx_stabilizes(&c, &ratio(1, 4)).unwrap().alpha, 2);
        for eps in [ratio(3, 8), ratio(1, 4)] {
            let eq = limit_equivalence(&c, &eps).unwrap();
            assert!(eq.equivalent && eq.stabilizing_alpha == eq.limit_alpha);
        }
        let constant = DescendingChain::new(c.structure.clone(), vec![[0, 1].into_iter().collect(); 3]).unwrap();
        assert_eq!(approx_stabilizes(&constant, &ratio(1, 100)).unwrap().alpha, 0);
    }

    #[test]
    fn chase() {
        let c = fixtures::path3_chain();
        let out = chase_limit_point(&c, &|m| m, 1, 0).unwrap();
        assert_eq!(out.limit, "p");
        assert!(out.within_bound);
        assert_eq!(out.trace.len(), 2);
        let bad = chase_limit_point(&c, &|m| if m == 1 { 0 } else { 2 }, 2, 0);
        assert!(matches!(bad, Err(ChainError::Step { step: 0, .. })));
    }

    #[test]
    fn lazy_failure_witness() {
        let m = fixtures::path3().metric;
        let lazy = FnChain {
            metric: &m,
            generate: |n: usize| if n == 0 { [0, 1, 2].into_iter().collect() } else { [0].into_iter().collect() },
            horizon: 0,
        };
        assert!(approx_stabilizes_lazy(&lazy, &ratio(1, 4), None).is_ok());
        let shrinking = FnChain {
            metric: &m,
            generate: |n: usize| (0..3 - n.min(2)).collect::<PointSet>(),
            horizon: 2,
        };
        assert_eq!(approx_stabilizes_lazy(&shrinking, &ratio(1, 4), None).unwrap().alpha, 2);
        let w = approx_stabilizes_lazy(&shrinking, &ratio(1, 4), Some(1)).unwrap_err();
        assert_eq!((w.alpha, w.beta, w.point.as_str()), (1, 2, "q"));
    }

    #[test]
    fn definable_limit_table() {
        let rep = definable_limit(&fixtures::path3_chain()).unwrap();
        assert!(rep.certified);
        let find = |e: &str| rep.alpha_table.iter().find(|a| a.eps == e).unwrap().alpha;
        assert_eq!((find("3/8"), find("1/4")), (1, 2));
    }

    #[test]
    fn family() {
        let m = fixtures::path3().metric;
        let a = distance_member(&m, &[0, 1].into_iter().collect()).unwrap();
        let b = distance_member(&m, &[0].into_iter().collect()).unwrap();
        let cands = vec![("p".to_string(), b.clone())];
        let rep = uniform_family_limit(&m, &[a.clone(), b.clone()], &cands).unwrap();
        assert_eq!(rep.limit, b);
        assert!(rep.zero_sets_agree && rep.is_distance);
        assert_eq!(rep.instance.as_deref(), Some("p"));
        assert!(uniform_family_limit(&m, &[b, a], &[]).is_err());
    }
}
