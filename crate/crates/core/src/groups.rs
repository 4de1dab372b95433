//! Finite metric groups: axioms, invariance, invariant metrics, cosets and
//! approximate products.

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::definable::zero_set;
use crate::metric::{dist_to_set, separation_number, set_distance, MetricTable, MetricViolation, PointSet};
use crate::rational::{format_rational, Rational, TruthValue};
use crate::structure::{FiniteStructure, StructureError, StructureFile};

#[derive(Debug, Error)]
pub enum GroupError {
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("duplicate operation entry for ({0}, {1})")]
    DuplicateEntry(String, String),
    #[error("group axioms fail: {0}")]
    NotAGroup(String),
    #[error("not a metric on the group: {0:?}")]
    NotMetric(MetricViolation),
    #[error("not a subgroup: {0}")]
    NotSubgroup(String),
    #[error("ternary table has {found} entries, expected {expected}")]
    TableSize { found: usize, expected: usize },
    #[error("malformed approximate product: {0}")]
    Malformed(String),
    #[error("y0 = {label} is at distance {distance} from G, not > r = {r}")]
    TooClose { label: String, distance: String, r: String },
    #[error("approximate product is not certified at ε = {0}")]
    NotCertified(String),
    #[error("implication violated: {0}")]
    Internal(String),
}

/// On-disk layout: a structure file plus the group keys.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupFile {
    #[serde(flatten)]
    pub structure: StructureFile,
    pub op: Vec<(String, String, String)>,
    pub identity: String,
    pub inverse: BTreeMap<String, String>,
    /// Elements forming the group; the whole universe when absent.
    #[serde(default)]
    pub carrier: Option<Vec<String>>,
}

/// A group living on a subset of a finite structure's universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteMetricGroup {
    pub structure: FiniteStructure,
    pub carrier: Vec<usize>,
    /// `mul[a·n + b]`, defined wherever the file gives an entry.
    pub mul: Vec<Option<usize>>,
    pub identity: usize,
    pub inverse: Vec<Option<usize>>,
}

impl FiniteMetricGroup {
    pub fn from_json(text: &str) -> Result<Self, GroupError> {
        let file: GroupFile = serde_json::from_str(text)?;
        let structure = file.structure.build()?;
        let n = structure.size();
        let find = |l: &str| structure.element(l).map_err(|_| GroupError::UnknownElement(l.to_string()));
        let mut mul = vec![None; n * n];
        for (a, b, c) in &file.op {
            let (ia, ib, ic) = (find(a)?, find(b)?, find(c)?);
            if mul[ia * n + ib].replace(ic).is_some() {
                return Err(GroupError::DuplicateEntry(a.clone(), b.clone()));
            }
        }
        let mut inverse = vec![None; n];
        for (a, b) in &file.inverse {
            inverse[find(a)?] = Some(find(b)?);
        }
        let identity = find(&file.identity)?;
        let carrier = match &file.carrier {
            Some(list) => {
                let mut v = list.iter().map(|l| find(l)).collect::<Result<Vec<_>, _>>()?;
                v.sort_unstable();
                v.dedup();
                v
            }
            None => (0..n).collect(),
        };
        Ok(FiniteMetricGroup {
            structure,
            carrier,
            mul,
            identity,
            inverse,
        })
    }

    /// `Z/n` on labels `"0".."n-1"` with the given metric.
    pub fn cyclic(metric: MetricTable) -> Self {
        let n = metric.len();
        let structure = FiniteStructure::new(metric);
        FiniteMetricGroup {
            structure,
            carrier: (0..n).collect(),
            mul: (0..n * n).map(|k| Some((k / n + k % n) % n)).collect(),
            identity: 0,
            inverse: (0..n).map(|a| Some((n - a) % n)).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.structure.size()
    }

    pub fn metric(&self) -> &MetricTable {
        &self.structure.metric
    }

    pub fn label(&self, a: usize) -> &str {
        self.structure.metric.label(a)
    }

    pub fn carrier_set(&self) -> PointSet {
        self.carrier.iter().copied().collect()
    }

    pub fn try_mul(&self, a: usize, b: usize) -> Option<usize> {
        self.mul[a * self.size() + b]
    }

    /// Product of two elements; panics outside the table, so call after [`check_group`].
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.try_mul(a, b).expect("product defined on the carrier")
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a].expect("inverse defined on the carrier")
    }

    /// Same group with another ambient metric.
    pub fn with_metric(&self, metric: MetricTable) -> Self {
        let mut g = self.clone();
        g.structure.metric = metric;
        g
    }

    /// Same table restricted to a different carrier.
    pub fn with_carrier(&self, carrier: &PointSet) -> Self {
        let mut g = self.clone();
        g.carrier = carrier.iter().copied().collect();
        g
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroupReport {
    pub passed: bool,
    pub witnesses: Vec<String>,
}

pub fn check_group(g: &FiniteMetricGroup) -> GroupReport {
    let mut witnesses = Vec::new();
    let inside = g.carrier_set();
    let l = |a: usize| g.label(a).to_string();
    if !inside.contains(&g.identity) {
        witnesses.push(format!("identity {} not in the carrier", l(g.identity)));
    }
    for &a in &g.carrier {
        for &b in &g.carrier {
            match g.try_mul(a, b) {
                None => witnesses.push(format!("{}·{} undefined", l(a), l(b))),
                Some(c) if !inside.contains(&c) => witnesses.push(format!("{}·{} = {} leaves the carrier", l(a), l(b), l(c))),
                _ => {}
            }
        }
    }
    if !witnesses.is_empty() {
        return GroupReport {
            passed: false,
            witnesses,
        };
    }
    'assoc: for &a in &g.carrier {
        for &b in &g.carrier {
            for &c in &g.carrier {
                let left = g.mul(g.mul(a, b), c);
                let right = g.mul(a, g.mul(b, c));
                if left != right {
                    witnesses.push(format!("({}·{})·{} = {} ≠ {} = {}·({}·{})", l(a), l(b), l(c), l(left), l(right), l(a), l(b), l(c)));
                    break 'assoc;
                }
            }
        }
    }
    for &a in &g.carrier {
        if g.mul(g.identity, a) != a || g.mul(a, g.identity) != a {
            witnesses.push(format!("identity row fails at {}", l(a)));
        }
        match g.inverse[a] {
            Some(b) if inside.contains(&b) && g.mul(a, b) == g.identity && g.mul(b, a) == g.identity => {}
            Some(b) => witnesses.push(format!("{} is not an inverse of {}", l(b), l(a))),
            None => witnesses.push(format!("no inverse given for {}", l(a))),
        }
    }
    GroupReport {
        passed: witnesses.is_empty(),
        witnesses,
    }
}

fn require_group(g: &FiniteMetricGroup) -> Result<(), GroupError> {
    let rep = check_group(g);
    match rep.witnesses.first() {
        Some(w) => Err(GroupError::NotAGroup(w.clone())),
        None => Ok(()),
    }
}

fn carrier_metric(g: &FiniteMetricGroup, d: &MetricTable) -> MetricTable {
    let labels = g.carrier.iter().map(|&a| d.label(a).to_string()).collect();
    MetricTable::from_fn(labels, |i, j| d.d(g.carrier[i], g.carrier[j]).clone())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InvarianceWitness {
    /// Translating element, or `None` for inversion.
    pub z: Option<String>,
    pub x: String,
    pub y: String,
    pub before: TruthValue,
    pub after: TruthValue,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InvarianceFlags {
    pub left: bool,
    pub right: bool,
    pub inverse: bool,
    pub left_witness: Option<InvarianceWitness>,
    pub right_witness: Option<InvarianceWitness>,
    pub inverse_witness: Option<InvarianceWitness>,
}

/// Independent left-, right- and inverse-invariance scans of `d` on the carrier.
pub fn check_invariance(g: &FiniteMetricGroup, d: &MetricTable) -> Result<InvarianceFlags, GroupError> {
    require_group(g)?;
    if let Some(v) = carrier_metric(g, d).violations(true).into_iter().next() {
        return Err(GroupError::NotMetric(v));
    }
    let witness = |z: Option<usize>, x: usize, y: usize, a: usize, b: usize| InvarianceWitness {
        z: z.map(|z| d.label(z).to_string()),
        x: d.label(x).to_string(),
        y: d.label(y).to_string(),
        before: d.d(x, y).clone(),
        after: d.d(a, b).clone(),
    };
    let mut left_witness = None;
    let mut right_witness = None;
    let mut inverse_witness = None;
    for &x in &g.carrier {
        for &y in &g.carrier {
            for &z in &g.carrier {
                let (a, b) = (g.mul(z, x), g.mul(z, y));
                if left_witness.is_none() && d.d(a, b) != d.d(x, y) {
                    left_witness = Some(witness(Some(z), x, y, a, b));
                }
                let (a, b) = (g.mul(x, z), g.mul(y, z));
                if right_witness.is_none() && d.d(a, b) != d.d(x, y) {
                    right_witness = Some(witness(Some(z), x, y, a, b));
                }
            }
            let (a, b) = (g.inv(x), g.inv(y));
            if inverse_witness.is_none() && d.d(a, b) != d.d(x, y) {
                inverse_witness = Some(witness(None, x, y, a, b));
            }
        }
    }
    let flags = InvarianceFlags {
        left: left_witness.is_none(),
        right: right_witness.is_none(),
        inverse: inverse_witness.is_none(),
        left_witness,
        right_witness,
        inverse_witness,
    };
    if flags.left && flags.inverse && !flags.right {
        return Err(GroupError::Internal("left + inverse invariant but not right invariant".into()));
    }
    if flags.left && flags.right && !flags.inverse {
        return Err(GroupError::Internal("invariant but not inverse invariant".into()));
    }
    Ok(flags)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantMetric {
    /// On the carrier, labelled as in the ambient structure.
    pub metric: MetricTable,
    pub flags: InvarianceFlags,
    pub dominates_input: bool,
    /// Whether the variant `max d(uxv, yv)` is a bi-invariant metric on this input.
    pub variant_invariant: bool,
    pub note: &'static str,
}

/// `d₁(x,y) = max_{u,v∈G} d(u·x·v, u·y·v)`.
pub fn invariant_metric(g: &FiniteMetricGroup) -> Result<InvariantMetric, GroupError> {
    require_group(g)?;
    let d = g.metric();
    let c = &g.carrier;
    let two_sided = |x: usize, y: usize| {
        c.iter()
            .flat_map(|&u| c.iter().map(move |&v| (u, v)))
            .map(|(u, v)| d.d(g.mul(g.mul(u, x), v), g.mul(g.mul(u, y), v)).clone())
            .max()
            .unwrap_or_else(TruthValue::zero)
    };
    let labels: Vec<String> = c.iter().map(|&a| d.label(a).to_string()).collect();
    let d1 = MetricTable::from_fn(labels.clone(), |i, j| two_sided(c[i], c[j]));
    let sub = g.with_carrier(&g.carrier_set());
    let mut padded = d.clone();
    for (i, &x) in c.iter().enumerate() {
        for (j, &y) in c.iter().enumerate() {
            padded.set(x, y, d1.d(i, j).clone());
        }
    }
    let flags = check_invariance(&sub, &padded)?;
    if !(flags.left && flags.right && flags.inverse) {
        return Err(GroupError::Internal(format!("two-sided maximum not invariant: {flags:?}")));
    }
    let dominates_input = (0..c.len()).all(|i| (0..c.len()).all(|j| d1.d(i, j) >= d.d(c[i], c[j])));

    let variant = MetricTable::from_fn(labels, |i, j| {
        c.iter()
            .flat_map(|&u| c.iter().map(move |&v| (u, v)))
            .map(|(u, v)| d.d(g.mul(g.mul(u, c[i]), v), g.mul(c[j], v)).clone())
            .max()
            .unwrap_or_else(TruthValue::zero)
    });
    let variant_invariant = variant.is_metric() && {
        let mut vp = d.clone();
        for (i, &x) in c.iter().enumerate() {
            for (j, &y) in c.iter().enumerate() {
                vp.set(x, y, variant.d(i, j).clone());
            }
        }
        check_invariance(&sub, &vp).map(|f| f.left && f.right && f.inverse).unwrap_or(false)
    };
    Ok(InvariantMetric {
        metric: d1,
        flags,
        dominates_input,
        variant_invariant,
        note: "uses max d(uxv, uyv); the one-sided variant max d(uxv, yv) is reported for comparison",
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CosetDistance {
    pub cosets: Vec<Vec<String>>,
    pub distance: TruthValue,
}

/// `d(x, G)` as a minimum over the left cosets `gH`.
pub fn coset_union_distance(g: &FiniteMetricGroup, h: &PointSet, x: usize) -> Result<CosetDistance, GroupError> {
    require_group(g)?;
    let inside = g.carrier_set();
    if h.is_empty() || !h.is_subset(&inside) {
        return Err(GroupError::NotSubgroup("H must be a nonempty subset of G".into()));
    }
    for &a in h {
        if !h.contains(&g.inv(a)) {
            return Err(GroupError::NotSubgroup(format!("inverse of {} missing", g.label(a))));
        }
        for &b in h {
            if !h.contains(&g.mul(a, b)) {
                return Err(GroupError::NotSubgroup(format!("{}·{} missing", g.label(a), g.label(b))));
            }
        }
    }
    let mut cosets: Vec<PointSet> = Vec::new();
    for &a in &g.carrier {
        if cosets.iter().any(|c| c.contains(&a)) {
            continue;
        }
        cosets.push(h.iter().map(|&b| g.mul(a, b)).collect());
    }
    let d = g.metric();
    let distance = cosets
        .iter()
        .filter_map(|c| dist_to_set(d, x, c))
        .min()
        .expect("at least one coset");
    if Some(&distance) != dist_to_set(d, x, &inside).as_ref() {
        return Err(GroupError::Internal("coset minimum differs from the direct distance".into()));
    }
    Ok(CosetDistance {
        cosets: cosets.iter().map(|c| c.iter().map(|&a| g.label(a).to_string()).collect()).collect(),
        distance,
    })
}

/// Ambient structure with a group `G` inside, a ternary `φ` whose zero sets
/// give the approximate product, and neighbourhoods `G ⊆ Y ⊆ X`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApproxProduct {
    pub group: FiniteMetricGroup,
    /// `phi[(x·n + y)·n + z]`
    pub phi: Vec<TruthValue>,
    pub eps: Rational,
    pub x_set: PointSet,
    pub y_set: PointSet,
}

impl ApproxProduct {
    /// Normalizes `φ` so every `φ(x,y,·)` attains 0 and checks the invariants.
    pub fn new(group: FiniteMetricGroup, phi: Vec<TruthValue>, eps: Rational, x_set: PointSet, y_set: PointSet) -> Result<Self, GroupError> {
        let n = group.size();
        if phi.len() != n * n * n {
            return Err(GroupError::TableSize {
                found: phi.len(),
                expected: n * n * n,
            });
        }
        require_group(&group)?;
        let mut phi = phi;
        for xy in 0..n * n {
            let row = &mut phi[xy * n..(xy + 1) * n];
            let least = row.iter().min().cloned().expect("nonempty universe");
            for v in row.iter_mut() {
                *v = v.monus(&least);
            }
        }
        let inside = group.carrier_set();
        if !inside.is_subset(&y_set) || !y_set.is_subset(&x_set) || x_set.iter().any(|&a| a >= n) {
            return Err(GroupError::Malformed("need G ⊆ Y ⊆ X inside the universe".into()));
        }
        let ap = ApproxProduct {
            group,
            phi,
            eps,
            x_set,
            y_set,
        };
        for &x in &inside {
            for &y in &inside {
                let expected: PointSet = [ap.group.mul(x, y)].into_iter().collect();
                if ap.product(x, y) != expected {
                    return Err(GroupError::Malformed(format!(
                        "zero set of φ({}, {}, ·) is not {{{}}}",
                        ap.group.label(x),
                        ap.group.label(y),
                        ap.group.label(ap.group.mul(x, y))
                    )));
                }
            }
        }
        Ok(ap)
    }

    /// `φ(x,y,z) = d(x·y, z)` from the ambient table, with `Y = X =` everything
    /// on which the table is total.
    pub fn exact(group: FiniteMetricGroup, eps: Rational) -> Result<Self, GroupError> {
        let n = group.size();
        let total: PointSet = (0..n).filter(|&a| (0..n).all(|b| group.try_mul(a, b).is_some() && group.try_mul(b, a).is_some())).collect();
        let d = group.metric().clone();
        let mut phi = Vec::with_capacity(n * n * n);
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    phi.push(match group.try_mul(x, y) {
                        Some(p) => d.d(p, z).clone(),
                        None => TruthValue::one(),
                    });
                }
            }
        }
        Self::new(group, phi, eps, total.clone(), total)
    }

    pub fn phi(&self, x: usize, y: usize, z: usize) -> &TruthValue {
        let n = self.group.size();
        &self.phi[(x * n + y) * n + z]
    }

    /// `x ·̃ y = {z : φ(x,y,z) = 0}`
    pub fn product(&self, x: usize, y: usize) -> PointSet {
        let n = self.group.size();
        zero_set(&self.phi[(x * n + y) * n..(x * n + y + 1) * n])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProductViolation {
    pub kind: &'static str,
    pub points: Vec<String>,
    pub gap: TruthValue,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProductAudit {
    pub certified: bool,
    /// Largest `|d(y,y′) − d(z,z′)|` seen.
    pub worst_gap: TruthValue,
    pub violations: Vec<ProductViolation>,
}

/// Exhaustive check of `Y ·̃ Y ⊆ X` and of both almost-isometry conditions at `ap.eps`.
pub fn audit_approx_product(ap: &ApproxProduct) -> ProductAudit {
    let d = ap.group.metric();
    let l = |a: usize| d.label(a).to_string();
    let mut violations = Vec::new();
    let mut worst = TruthValue::zero();
    let ys: Vec<usize> = ap.y_set.iter().copied().collect();
    let products: BTreeMap<(usize, usize), PointSet> =
        ys.iter().flat_map(|&x| ys.iter().map(move |&y| (x, y))).map(|(x, y)| ((x, y), ap.product(x, y))).collect();
    for (&(x, y), zs) in &products {
        for &z in zs {
            if !ap.x_set.contains(&z) {
                violations.push(ProductViolation {
                    kind: "containment",
                    points: vec![l(x), l(y), l(z)],
                    gap: TruthValue::one(),
                });
            }
        }
    }
    for &x in &ys {
        for &y in &ys {
            for &y2 in &ys {
                let target = d.d(y, y2);
                let sides = [
                    ("left", &products[&(x, y)], &products[&(x, y2)]),
                    ("right", &products[&(y, x)], &products[&(y2, x)]),
                ];
                for (kind, zs, zs2) in sides {
                    for &z in zs {
                        for &z2 in zs2 {
                            let gap = target.abs_diff(d.d(z, z2));
                            if gap.value() > &ap.eps {
                                violations.push(ProductViolation {
                                    kind,
                                    points: vec![l(x), l(y), l(y2), l(z), l(z2)],
                                    gap: gap.clone(),
                                });
                            }
                            worst = worst.join(&gap);
                        }
                    }
                }
            }
        }
    }
    ProductAudit {
        certified: violations.is_empty(),
        worst_gap: worst,
        violations,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TranslateReport {
    pub z: Vec<String>,
    pub distance_to_g: TruthValue,
    /// `d(G, Z) > r − ε`
    pub far: bool,
    pub sep_g: usize,
    pub sep_z: usize,
    /// `sep_{r−ε}(Z) ≥ sep_r(G)`
    pub separation_transfers: bool,
    /// With `ε = 0`: `Z` is isometric to `G` via `h ↦ y₀·h`.
    pub isometric: Option<bool>,
}

/// `Z = y₀ ·̃ G` and the two finite-scale conclusions about it.
pub fn translate_copy(ap: &ApproxProduct, y0: usize, r: &Rational, eps: &Rational) -> Result<(PointSet, TranslateReport), GroupError> {
    let mut at_eps = ap.clone();
    at_eps.eps = eps.clone();
    if !audit_approx_product(&at_eps).certified {
        return Err(GroupError::NotCertified(format_rational(eps)));
    }
    let d = ap.group.metric();
    let g = ap.group.carrier_set();
    if !ap.y_set.contains(&y0) {
        return Err(GroupError::Malformed(format!("{} ∉ Y", d.label(y0))));
    }
    let to_g = dist_to_set(d, y0, &g).expect("G nonempty");
    if to_g.value() <= r {
        return Err(GroupError::TooClose {
            label: d.label(y0).to_string(),
            distance: to_g.to_string(),
            r: format_rational(r),
        });
    }
    let z: PointSet = g.iter().flat_map(|&h| ap.product(y0, h)).collect();
    let distance_to_g = set_distance(d, &g, &z).expect("both sides nonempty");
    let lowered = r - eps;
    let far = distance_to_g.value() > &lowered;
    let gs: Vec<usize> = g.iter().copied().collect();
    let zs: Vec<usize> = z.iter().copied().collect();
    let sep_g = separation_number(d, &gs, r);
    let sep_z = separation_number(d, &zs, &lowered);
    let isometric = eps.is_zero().then(|| {
        gs.iter().all(|&h1| {
            gs.iter().all(|&h2| {
                let (a, b) = (ap.product(y0, h1), ap.product(y0, h2));
                a.iter().all(|&z1| b.iter().all(|&z2| d.d(z1, z2) == d.d(h1, h2)))
            })
        })
    });
    let report = TranslateReport {
        z: zs.iter().map(|&a| d.label(a).to_string()).collect(),
        distance_to_g,
        far,
        sep_g,
        sep_z,
        separation_transfers: sep_z >= sep_g,
        isometric,
    };
    Ok((z, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rational::ratio;

    #[test]
    fn c4skew_group_and_invariance() {
        let g = fixtures::c4skew();
        assert!(check_group(&g).passed);
        let flags = check_invariance(&g, g.metric()).unwrap();
        assert!(!flags.left);
        let w = flags.left_witness.unwrap();
        assert_eq!((w.z.as_deref(), w.x.as_str(), w.y.as_str()), (Some("1"), "0", "1"));
        assert_eq!((w.before, w.after), (TruthValue::ratio(1, 4), TruthValue::ratio(1, 2)));

        let inv = invariant_metric(&g).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { TruthValue::zero() } else { TruthValue::ratio(1, 2) };
                assert_eq!(inv.metric.d(i, j), &want);
            }
        }
        assert!(inv.dominates_input && !inv.variant_invariant);
    }

    #[test]
    fn word_metric_invariant() {
        let g = fixtures::z4_word();
        let flags = check_invariance(&g, g.metric()).unwrap();
        assert!(flags.left && flags.right && flags.inverse);
        assert_eq!(&invariant_metric(&g).unwrap().metric, g.metric());
    }

    #[test]
    fn broken_tables() {
        let mut g = fixtures::z4_word();
        g.mul[1 * 4 + 1] = Some(3);
        assert!(!check_group(&g).passed);
        let mut g = fixtures::z4_word();
        g.mul[0] = Some(1);
        assert!(check_group(&g).witnesses.iter().any(|w| w.contains("identity")));
    }

    #[test]
    fn cosets() {
        let g = fixtures::z4_word();
        let h: PointSet = [0, 2].into_iter().collect();
        let c = coset_union_distance(&g, &h, 1).unwrap();
        assert_eq!(c.cosets.len(), 2);
        assert!(c.distance.is_zero());
        let sub = g.with_carrier(&h);
        assert_eq!(coset_union_distance(&sub, &h, 1).unwrap().distance, TruthValue::ratio(1, 2));
        assert!(coset_union_distance(&g, &[1].into_iter().collect(), 0).is_err());
    }

    #[test]
    fn translate_z4() {
        let g = fixtures::z4_word().with_carrier(&[0, 2].into_iter().collect());
        let ap = ApproxProduct::exact(g, Rational::zero()).unwrap();
        assert!(audit_approx_product(&ap).certified);
        let (z, rep) = translate_copy(&ap, 1, &ratio(1, 4), &Rational::zero()).unwrap();
        assert_eq!(z, [1, 3].into_iter().collect());
        assert_eq!(rep.distance_to_g, TruthValue::ratio(1, 2));
        assert!(rep.far && rep.separation_transfers && rep.isometric == Some(true));
        assert_eq!((rep.sep_z, rep.sep_g), (2, 2));
        assert!(matches!(translate_copy(&ap, 2, &ratio(1, 4), &Rational::zero()), Err(GroupError::TooClose { .. })));
    }

    #[test]
    fn audit_sees_non_invariance() {
        let ap = ApproxProduct::exact(fixtures::c4skew(), Rational::zero()).unwrap();
        let audit = audit_approx_product(&ap);
        assert!(!audit.certified && audit.worst_gap == TruthValue::ratio(1, 4));
        let mut loose = ap.clone();
        loose.eps = ratio(1, 4);
        assert!(audit_approx_product(&loose).certified);
    }
}
