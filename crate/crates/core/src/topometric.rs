//! ε-Cantor-Bendixson ranks and degrees on tree-presented topometric spaces.
//!
//! A space is a forest. Each root is one point. Each non-root node stands for
//! ω copies per instance of its parent, and the copies converge to that parent
//! instance. Two instances are at the scale of the node at their deepest common
//! instance prefix. Points in different trees are at the tabulated distance `D`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metric::{separation_number, MetricTable};
use crate::rational::{format_rational, int, serde_q, Rational, TruthValue};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopometricError {
    #[error("invalid space: {0}")]
    InvalidSpace(String),
    #[error("ε must be positive")]
    NonPositiveEpsilon,
    #[error("bad node id `{0}`")]
    BadNodeId(String),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("malformed space file: {0}")]
    Json(String),
}

/// Dotted path: tree index, then child indices (`"0.1.0"`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub Vec<usize>);

impl NodeId {
    pub fn root(tree: usize) -> Self {
        NodeId(vec![tree])
    }

    pub fn tree(&self) -> usize {
        self.0[0]
    }

    /// Number of copy indices on an instance path (0 for roots).
    pub fn depth(&self) -> usize {
        self.0.len() - 1
    }

    pub fn parent(&self) -> Option<NodeId> {
        (self.depth() > 0).then(|| NodeId(self.0[..self.0.len() - 1].to_vec()))
    }

    pub fn child(&self, k: usize) -> NodeId {
        let mut v = self.0.clone();
        v.push(k);
        NodeId(v)
    }

    pub fn ancestor(&self, depth: usize) -> NodeId {
        NodeId(self.0[..=depth].to_vec())
    }

    pub fn is_ancestor_of(&self, other: &NodeId) -> bool {
        other.0.len() > self.0.len() && other.0.starts_with(&self.0)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|k| k.to_string()).collect();
        f.write_str(&parts.join("."))
    }
}

impl FromStr for NodeId {
    type Err = TopometricError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Result<Vec<usize>, _> = s.trim().split('.').map(|p| p.parse::<usize>()).collect();
        match parts {
            Ok(v) if !v.is_empty() => Ok(NodeId(v)),
            _ => Err(TopometricError::BadNodeId(s.to_string())),
        }
    }
}

impl Serialize for NodeId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for NodeId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeNode {
    #[serde(with = "serde_q")]
    pub scale: Rational,
    #[serde(default)]
    pub children: Vec<TreeNode>,
}

impl TreeNode {
    pub fn leaf(scale: Rational) -> Self {
        TreeNode {
            scale,
            children: Vec::new(),
        }
    }

    pub fn with_children(scale: Rational, children: Vec<TreeNode>) -> Self {
        TreeNode { scale, children }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SpaceFile {
    trees: Vec<TreeNode>,
    #[serde(rename = "D", default)]
    d: Vec<(usize, usize, TruthValue)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeInfo {
    pub id: NodeId,
    pub scale: Rational,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeClusterSpace {
    pub trees: Vec<TreeNode>,
    /// Inter-tree distances keyed by `(i, j)` with `i < j`.
    pub dist: BTreeMap<(usize, usize), TruthValue>,
    nodes: Vec<NodeInfo>,
    index: BTreeMap<NodeId, usize>,
}

impl TreeClusterSpace {
    pub fn new(trees: Vec<TreeNode>, dist: BTreeMap<(usize, usize), TruthValue>) -> Self {
        let mut nodes = Vec::new();
        fn walk(node: &TreeNode, id: NodeId, parent: Option<usize>, out: &mut Vec<NodeInfo>) -> usize {
            let at = out.len();
            out.push(NodeInfo {
                id: id.clone(),
                scale: node.scale.clone(),
                parent,
                children: Vec::new(),
            });
            for (k, c) in node.children.iter().enumerate() {
                let ci = walk(c, id.child(k), Some(at), out);
                out[at].children.push(ci);
            }
            at
        }
        for (t, tree) in trees.iter().enumerate() {
            walk(tree, NodeId::root(t), None, &mut nodes);
        }
        let index = nodes.iter().enumerate().map(|(i, n)| (n.id.clone(), i)).collect();
        let dist = dist.into_iter().map(|((i, j), v)| ((i.min(j), i.max(j)), v)).collect();
        TreeClusterSpace {
            trees,
            dist,
            nodes,
            index,
        }
    }

    /// A forest where every pair of trees sits at distance `join`.
    pub fn uniform(trees: Vec<TreeNode>, join: TruthValue) -> Self {
        let n = trees.len();
        let dist = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|k| (k, join.clone()))
            .collect();
        Self::new(trees, dist)
    }

    pub fn from_json(text: &str) -> Result<Self, TopometricError> {
        let file: SpaceFile = serde_json::from_str(text).map_err(|e| TopometricError::Json(e.to_string()))?;
        let mut dist = BTreeMap::new();
        for (i, j, v) in file.d {
            let key = (i.min(j), i.max(j));
            if let Some(old) = dist.insert(key, v.clone()) {
                if old != v {
                    return Err(TopometricError::Json(format!("conflicting D entries for trees {i}, {j}")));
                }
            }
        }
        Ok(Self::new(file.trees, dist))
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let file = SpaceFile {
            trees: self.trees.clone(),
            d: self.dist.iter().map(|(&(i, j), v)| (i, j, v.clone())).collect(),
        };
        serde_json::to_value(file).expect("space serializes")
    }

    pub fn nodes(&self) -> &[NodeInfo] {
        &self.nodes
    }

    pub fn node_ids(&self) -> Vec<NodeId> {
        self.nodes.iter().map(|n| n.id.clone()).collect()
    }

    pub fn lookup(&self, id: &NodeId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn node(&self, id: &NodeId) -> Option<&NodeInfo> {
        self.lookup(id).map(|i| &self.nodes[i])
    }

    pub fn tree_distance(&self, i: usize, j: usize) -> Option<&TruthValue> {
        self.dist.get(&(i.min(j), i.max(j)))
    }

    pub fn roots(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().enumerate().filter(|(_, n)| n.parent.is_none()).map(|(i, _)| i)
    }

    /// Distinct node scales in increasing order.
    pub fn scales(&self) -> Vec<Rational> {
        let set: BTreeSet<Rational> = self.nodes.iter().map(|n| n.scale.clone()).collect();
        set.into_iter().collect()
    }

    /// Distance between an instance of `a` and an instance of `b` whose copy
    /// indices agree on exactly the first `agree` positions (`agree ≥ depth`
    /// meaning all shared positions agree).
    pub fn instance_distance(&self, a: &NodeId, b: &NodeId, agree: usize) -> Rational {
        if a.tree() != b.tree() {
            return self
                .tree_distance(a.tree(), b.tree())
                .map(|v| v.value().clone())
                .unwrap_or_else(Rational::one);
        }
        if a == b && agree >= a.depth() {
            return Rational::zero();
        }
        let common = a.0.iter().zip(&b.0).skip(1).take_while(|(x, y)| x == y).count();
        let depth = common.min(agree).min(a.depth()).min(b.depth());
        self.node(&a.ancestor(depth)).expect("ancestor exists").scale.clone()
    }

    /// Disjoint union with every cross pair of trees at distance `join`.
    pub fn disjoint_union(&self, other: &TreeClusterSpace, join: TruthValue) -> TreeClusterSpace {
        let shift = self.trees.len();
        let mut trees = self.trees.clone();
        trees.extend(other.trees.iter().cloned());
        let mut dist = self.dist.clone();
        for (&(i, j), v) in &other.dist {
            dist.insert((i + shift, j + shift), v.clone());
        }
        for i in 0..shift {
            for j in 0..other.trees.len() {
                dist.insert((i, j + shift), join.clone());
            }
        }
        TreeClusterSpace::new(trees, dist)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScaleViolation {
    pub node: NodeId,
    pub parent_scale: String,
    pub child_scale: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpaceReport {
    pub passed: bool,
    pub points: String,
    pub scale_violations: Vec<ScaleViolation>,
    pub range_violations: Vec<String>,
    pub distance_violations: Vec<String>,
    /// Lower semi-continuity of `d`; holds at node level exactly when scales
    /// strictly decrease along every edge.
    pub lower_semicontinuous: bool,
}

pub fn check_space(t: &TreeClusterSpace) -> SpaceReport {
    let mut scale_violations = Vec::new();
    let mut range_violations = Vec::new();
    let mut distance_violations = Vec::new();
    for n in &t.nodes {
        if n.scale <= Rational::zero() || n.scale > Rational::one() {
            range_violations.push(format!("scale of {} is {} ∉ (0,1]", n.id, format_rational(&n.scale)));
        }
        if let Some(p) = n.parent {
            if n.scale >= t.nodes[p].scale {
                scale_violations.push(ScaleViolation {
                    node: n.id.clone(),
                    parent_scale: format_rational(&t.nodes[p].scale),
                    child_scale: format_rational(&n.scale),
                });
            }
        }
    }
    let k = t.trees.len();
    for (&(i, j), v) in &t.dist {
        if i == j || j >= k {
            distance_violations.push(format!("D entry ({i},{j}) does not name two distinct trees"));
        } else if v.is_zero() {
            distance_violations.push(format!("D({i},{j}) = 0"));
        } else {
            for s in [&t.trees[i].scale, &t.trees[j].scale] {
                if v.value() < s {
                    distance_violations.push(format!("D({i},{j}) = {v} below root scale {}", format_rational(s)));
                }
            }
        }
    }
    for i in 0..k {
        for j in (i + 1)..k {
            if t.tree_distance(i, j).is_none() {
                distance_violations.push(format!("D({i},{j}) missing"));
            }
        }
    }
    for a in 0..k {
        for b in 0..k {
            for c in 0..k {
                if a == b || b == c || a == c {
                    continue;
                }
                if let (Some(ab), Some(bc), Some(ac)) = (t.tree_distance(a, b), t.tree_distance(b, c), t.tree_distance(a, c)) {
                    if ac.value() > &(ab.value() + bc.value()) && a < c {
                        distance_violations.push(format!("D({a},{c}) > D({a},{b}) + D({b},{c})"));
                    }
                }
            }
        }
    }
    let lower_semicontinuous = scale_violations.is_empty();
    let roots = t.trees.len();
    let points = if t.nodes.len() == roots {
        roots.to_string()
    } else {
        "ω".to_string()
    };
    SpaceReport {
        passed: scale_violations.is_empty() && range_violations.is_empty() && distance_violations.is_empty(),
        points,
        scale_violations,
        range_violations,
        distance_violations,
        lower_semicontinuous,
    }
}

/// Size of a largest family of indices that pairwise satisfy `far`.
pub fn max_clique(n: usize, far: impl Fn(usize, usize) -> bool) -> usize {
    fn grow(cands: &[usize], size: usize, best: &mut usize, far: &dyn Fn(usize, usize) -> bool) {
        if size + cands.len() <= *best {
            return;
        }
        if cands.is_empty() {
            *best = size;
            return;
        }
        for (k, &v) in cands.iter().enumerate() {
            let rest: Vec<usize> = cands[k + 1..].iter().copied().filter(|&w| far(v, w)).collect();
            grow(&rest, size + 1, best, far);
            if size + cands.len() - k - 1 <= *best {
                return;
            }
        }
    }
    let all: Vec<usize> = (0..n).collect();
    let mut best = 0;
    grow(&all, 0, &mut best, &far);
    best
}

/// Least `k` such that no `k + 1` points are pairwise at distance `> ε`.
pub fn eps_k_finite(m: &MetricTable, eps: &Rational) -> usize {
    let all: Vec<usize> = (0..m.len()).collect();
    separation_number(m, &all, eps)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankReport {
    #[serde(serialize_with = "ser_q")]
    pub eps: Rational,
    pub ranks: BTreeMap<NodeId, usize>,
    /// `None` for the empty space.
    pub rank: Option<usize>,
    pub degree: Option<usize>,
}

fn ser_q<S: serde::Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_rational(q))
}

/// Rank of every node: 0 for leaves and for scales `≤ ε`, else one more than
/// the largest child rank.
pub fn node_ranks(t: &TreeClusterSpace, eps: &Rational) -> Vec<usize> {
    let mut ranks = vec![0; t.nodes.len()];
    // children come after parents in the arena
    for i in (0..t.nodes.len()).rev() {
        let n = &t.nodes[i];
        if n.children.is_empty() || &n.scale <= eps {
            ranks[i] = 0;
        } else {
            ranks[i] = 1 + n.children.iter().map(|&c| ranks[c]).max().expect("has children");
        }
    }
    ranks
}

pub fn cb_rank_degree(t: &TreeClusterSpace, eps: &Rational) -> Result<RankReport, TopometricError> {
    if eps <= &Rational::zero() {
        return Err(TopometricError::NonPositiveEpsilon);
    }
    let report = check_space(t);
    if !report.passed {
        return Err(TopometricError::InvalidSpace(first_problem(&report)));
    }
    let ranks = node_ranks(t, eps);
    let roots: Vec<usize> = t.roots().collect();
    let rank = roots.iter().map(|&r| ranks[r]).max();
    // points of top rank are roots when the rank is positive; at rank 0 every
    // tree is either a single point or of diameter ≤ ε, so it counts once
    let degree = rank.map(|top| {
        let tops: Vec<usize> = roots.iter().copied().filter(|&r| ranks[r] == top).collect();
        max_clique(tops.len(), |a, b| {
            let (ta, tb) = (t.nodes[tops[a]].id.tree(), t.nodes[tops[b]].id.tree());
            t.tree_distance(ta, tb).map(|v| v.value() > eps).unwrap_or(false)
        })
    });
    Ok(RankReport {
        eps: eps.clone(),
        ranks: t.nodes.iter().zip(&ranks).map(|(n, &r)| (n.id.clone(), r)).collect(),
        rank,
        degree,
    })
}

fn first_problem(r: &SpaceReport) -> String {
    if let Some(v) = r.scale_violations.first() {
        return format!("scale of {} is {} ≥ parent scale {}", v.node, v.child_scale, v.parent_scale);
    }
    r.range_violations
        .first()
        .or(r.distance_violations.first())
        .cloned()
        .unwrap_or_default()
}

/// `CB_ε^K(K)` for a copy-uniform node set `K`, computed in the subspace `K`.
pub fn subspace_rank(t: &TreeClusterSpace, set: &BTreeSet<NodeId>, eps: &Rational) -> Option<usize> {
    let inside: Vec<bool> = t.nodes.iter().map(|n| set.contains(&n.id)).collect();
    let mut rank = vec![None::<usize>; t.nodes.len()];
    // best[i]: largest rank of a K-node strictly below i
    let mut below = vec![None::<usize>; t.nodes.len()];
    for i in (0..t.nodes.len()).rev() {
        let n = &t.nodes[i];
        let deeper = n
            .children
            .iter()
            .filter_map(|&c| match (rank[c], below[c]) {
                (Some(a), Some(b)) => Some(a.max(b)),
                (a, b) => a.or(b),
            })
            .max();
        below[i] = deeper;
        if inside[i] {
            rank[i] = Some(match deeper {
                Some(r) if &n.scale > eps => r + 1,
                _ => 0,
            });
        }
    }
    rank.into_iter().flatten().max()
}

/// `CB_δ^Y(F)`: the largest ambient rank of a point of `F`.
pub fn ambient_rank(t: &TreeClusterSpace, set: &BTreeSet<NodeId>, eps: &Rational) -> Option<usize> {
    let ranks = node_ranks(t, eps);
    t.nodes
        .iter()
        .zip(ranks)
        .filter(|(n, _)| set.contains(&n.id))
        .map(|(_, r)| r)
        .max()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GridStep {
    #[serde(serialize_with = "ser_q")]
    pub r: Rational,
    pub rank: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankGrid {
    #[serde(serialize_with = "ser_q")]
    pub r_prime: Rational,
    #[serde(serialize_with = "ser_q")]
    pub eps: Rational,
    pub trace: Vec<GridStep>,
}

/// Walks `r_n = r(1 − 2^{−n−1})` until two consecutive ranks agree.
pub fn rank_grid(t: &TreeClusterSpace, r: &Rational) -> Result<RankGrid, TopometricError> {
    if r <= &Rational::zero() {
        return Err(TopometricError::NonPositiveEpsilon);
    }
    let at = |n: u32| r * (Rational::one() - crate::rational::dyadic_unit(n + 1));
    let mut trace = vec![GridStep {
        r: at(0),
        rank: cb_rank_degree(t, &at(0))?.rank,
    }];
    let mut n = 0;
    loop {
        let next = at(n + 1);
        let rank = cb_rank_degree(t, &next)?.rank;
        trace.push(GridStep { r: next.clone(), rank });
        if trace[trace.len() - 1].rank == trace[trace.len() - 2].rank {
            let eps = &next - at(n);
            return Ok(RankGrid {
                r_prime: next,
                eps,
                trace,
            });
        }
        n += 1;
    }
}

/// Node pairs; `(a, b)` relates each instance of `a` to each instance of `b`
/// carrying the same copy indices on their shared positions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeRelation {
    pub pairs: BTreeSet<(NodeId, NodeId)>,
}

impl NodeRelation {
    pub fn identity(t: &TreeClusterSpace) -> Self {
        NodeRelation {
            pairs: t.node_ids().into_iter().map(|n| (n.clone(), n)).collect(),
        }
    }

    pub fn full(x: &TreeClusterSpace, y: &TreeClusterSpace) -> Self {
        let ys = y.node_ids();
        NodeRelation {
            pairs: x
                .node_ids()
                .into_iter()
                .flat_map(|a| ys.iter().map(move |b| (a.clone(), b.clone())))
                .collect(),
        }
    }

    pub fn fiber(&self, x: &NodeId) -> BTreeSet<NodeId> {
        self.pairs.iter().filter(|(a, _)| a == x).map(|(_, b)| b.clone()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageMode {
    /// `{x : R_x ⊆ A}`
    Forall,
    /// `{x : R_x ∩ A ≠ ∅}`
    Exists,
}

pub fn relation_image(domain: &[NodeId], r: &NodeRelation, a: &BTreeSet<NodeId>, mode: ImageMode) -> BTreeSet<NodeId> {
    domain
        .iter()
        .filter(|x| {
            let fiber = r.fiber(x);
            match mode {
                ImageMode::Forall => fiber.is_subset(a),
                ImageMode::Exists => !fiber.is_disjoint(a),
            }
        })
        .cloned()
        .collect()
}

/// Largest descendant-closed subset: the interior of a copy-uniform set.
pub fn interior(t: &TreeClusterSpace, set: &BTreeSet<NodeId>) -> BTreeSet<NodeId> {
    set.iter()
        .filter(|id| t.nodes.iter().all(|n| !id.is_ancestor_of(&n.id) || set.contains(&n.id)))
        .cloned()
        .collect()
}

/// Copy-uniform sets are closed exactly when ancestor-closed.
pub fn is_closed_set(set: &BTreeSet<NodeId>) -> bool {
    set.iter().all(|id| id.parent().map(|p| set.contains(&p)).unwrap_or(true))
}

/// Pair obtained by letting the deepest shared copy index run off to infinity.
fn limit_pair(a: &NodeId, b: &NodeId) -> Option<(NodeId, NodeId)> {
    let top = a.depth().max(b.depth());
    if top == 0 {
        return None;
    }
    let step = |n: &NodeId| if n.depth() == top { n.parent().expect("positive depth") } else { n.clone() };
    Some((step(a), step(b)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Hypothesis {
    pub holds: bool,
    pub witness: Option<String>,
}

impl Hypothesis {
    fn ok() -> Self {
        Hypothesis {
            holds: true,
            witness: None,
        }
    }

    fn fail(w: String) -> Self {
        Hypothesis {
            holds: false,
            witness: Some(w),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransferReport {
    pub relation_closed: Hypothesis,
    pub sets_closed: Hypothesis,
    pub metric: Hypothesis,
    pub containment: Hypothesis,
    pub hypotheses_hold: bool,
    pub cb_k: Option<usize>,
    pub cb_f: Option<usize>,
    /// `Some(CB_ε(K) ≤ CB_δ(F))` when every hypothesis holds.
    pub conclusion: Option<bool>,
}

#[allow(clippy::too_many_arguments)]
pub fn verify_transfer(
    x: &TreeClusterSpace,
    y: &TreeClusterSpace,
    r: &NodeRelation,
    k: &BTreeSet<NodeId>,
    f: &BTreeSet<NodeId>,
    eps: &Rational,
    delta: &Rational,
) -> Result<TransferReport, TopometricError> {
    if eps <= &Rational::zero() || delta <= &Rational::zero() {
        return Err(TopometricError::NonPositiveEpsilon);
    }
    for (a, b) in &r.pairs {
        x.lookup(a).ok_or_else(|| TopometricError::UnknownNode(a.clone()))?;
        y.lookup(b).ok_or_else(|| TopometricError::UnknownNode(b.clone()))?;
    }
    for id in k {
        x.lookup(id).ok_or_else(|| TopometricError::UnknownNode(id.clone()))?;
    }
    for id in f {
        y.lookup(id).ok_or_else(|| TopometricError::UnknownNode(id.clone()))?;
    }

    let relation_closed = r
        .pairs
        .iter()
        .find_map(|(a, b)| {
            let (pa, pb) = limit_pair(a, b)?;
            (!r.pairs.contains(&(pa.clone(), pb.clone()))).then(|| format!("({a}, {b}) ∈ R but limit ({pa}, {pb}) ∉ R"))
        })
        .map(Hypothesis::fail)
        .unwrap_or_else(Hypothesis::ok);

    let sets_closed = if !is_closed_set(k) {
        Hypothesis::fail("K is not ancestor-closed".into())
    } else if !is_closed_set(f) {
        Hypothesis::fail("F is not ancestor-closed".into())
    } else {
        Hypothesis::ok()
    };

    let metric = metric_hypothesis(x, y, r, eps, delta);

    let dom = relation_image(&x.node_ids(), r, &y.node_ids().into_iter().collect(), ImageMode::Exists);
    let open_dom = interior(x, &dom);
    let into_f = relation_image(&x.node_ids(), r, f, ImageMode::Forall);
    let containment = match k.iter().find(|id| !open_dom.contains(*id) || !into_f.contains(*id)) {
        None => Hypothesis::ok(),
        Some(id) if !open_dom.contains(id) => Hypothesis::fail(format!("{id} ∉ interior of the domain of R")),
        Some(id) => Hypothesis::fail(format!("R relates {id} outside F")),
    };

    let hypotheses_hold = relation_closed.holds && sets_closed.holds && metric.holds && containment.holds;
    let cb_k = subspace_rank(x, k, eps);
    let cb_f = ambient_rank(y, f, delta);
    let conclusion = hypotheses_hold.then(|| match (cb_k, cb_f) {
        (None, _) => true,
        (Some(_), None) => false,
        (Some(a), Some(b)) => a <= b,
    });
    Ok(TransferReport {
        relation_closed,
        sets_closed,
        metric,
        containment,
        hypotheses_hold,
        cb_k,
        cb_f,
        conclusion,
    })
}

/// Checks `d_Y(y,y′) ≤ δ ⇒ d_X(x,x′) ≤ ε` over every realizable agreement
/// pattern of copy indices. Positions shared by all four nodes agree or
/// disagree together; beyond them the two sides are independent.
fn metric_hypothesis(x: &TreeClusterSpace, y: &TreeClusterSpace, r: &NodeRelation, eps: &Rational, delta: &Rational) -> Hypothesis {
    for (a, b) in &r.pairs {
        for (a2, b2) in &r.pairs {
            let shared = a.depth().min(b.depth()).min(a2.depth()).min(b2.depth());
            let mut patterns: Vec<(usize, usize)> = (0..shared).map(|l| (l, l)).collect();
            let top_x = a.depth().max(a2.depth());
            let top_y = b.depth().max(b2.depth());
            for lx in shared..=top_x.max(shared) {
                for ly in shared..=top_y.max(shared) {
                    patterns.push((lx, ly));
                }
            }
            for (lx, ly) in patterns {
                let dy = y.instance_distance(b, b2, ly);
                let dx = x.instance_distance(a, a2, lx);
                if &dy <= delta && &dx > eps {
                    return Hypothesis::fail(format!(
                        "pairs ({a},{b}), ({a2},{b2}): d_Y = {} ≤ δ but d_X = {} > ε",
                        format_rational(&dy),
                        format_rational(&dx)
                    ));
                }
            }
        }
    }
    Hypothesis::ok()
}

/// Scale thresholds at which some rank can change, plus 0 and 1.
pub fn thresholds(t: &TreeClusterSpace) -> Vec<Rational> {
    let mut s: BTreeSet<Rational> = t.scales().into_iter().collect();
    s.insert(Rational::zero());
    s.insert(int(1));
    s.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rational::ratio;

    fn ids(list: &[&str]) -> BTreeSet<NodeId> {
        list.iter().map(|s| s.parse().unwrap()).collect()
    }

    #[test]
    fn tree_a_ranks() {
        let t = fixtures::tree_a();
        assert!(check_space(&t).passed);
        let r = cb_rank_degree(&t, &ratio(1, 8)).unwrap();
        assert_eq!((r.rank, r.degree), (Some(2), Some(1)));
        assert_eq!(r.ranks[&"0.0".parse().unwrap()], 1);
        assert_eq!(cb_rank_degree(&t, &ratio(3, 10)).unwrap().rank, Some(1));
        assert_eq!(cb_rank_degree(&t, &int(1)).unwrap().rank, Some(0));
        let two = t.disjoint_union(&t, TruthValue::one());
        let r = cb_rank_degree(&two, &ratio(1, 8)).unwrap();
        assert_eq!((r.rank, r.degree), (Some(2), Some(2)));
    }

    #[test]
    fn bad_scales_reported() {
        let t = TreeClusterSpace::new(
            vec![TreeNode::with_children(ratio(1, 4), vec![TreeNode::leaf(ratio(1, 2))])],
            BTreeMap::new(),
        );
        let rep = check_space(&t);
        assert!(!rep.passed && rep.scale_violations[0].node == "0.0".parse().unwrap());
        assert!(cb_rank_degree(&t, &ratio(1, 8)).is_err());
    }

    #[test]
    fn k_finite() {
        let m = fixtures::path3().metric;
        assert_eq!(eps_k_finite(&m, &ratio(1, 8)), 3);
        assert_eq!(eps_k_finite(&m, &ratio(1, 4)), 2);
        assert_eq!(eps_k_finite(&m, &ratio(1, 2)), 1);
    }

    #[test]
    fn grid() {
        let g = rank_grid(&fixtures::tree_a(), &ratio(1, 2)).unwrap();
        assert_eq!((g.r_prime.clone(), g.eps.clone()), (ratio(3, 8), ratio(1, 8)));
        assert_eq!(g.trace.iter().map(|s| s.rank).collect::<Vec<_>>(), vec![Some(1), Some(1)]);
    }

    #[test]
    fn images() {
        let t = fixtures::tree_a();
        let all: BTreeSet<NodeId> = t.node_ids().into_iter().collect();
        let a = ids(&["0", "0.0"]);
        let id = NodeRelation::identity(&t);
        assert_eq!(relation_image(&t.node_ids(), &id, &a, ImageMode::Forall), a);
        assert_eq!(relation_image(&t.node_ids(), &id, &a, ImageMode::Exists), a);
        let full = NodeRelation::full(&t, &t);
        assert!(relation_image(&t.node_ids(), &full, &a, ImageMode::Forall).is_empty());
        assert_eq!(relation_image(&t.node_ids(), &full, &a, ImageMode::Exists), all);
        assert_eq!(interior(&t, &a), BTreeSet::new());
        assert_eq!(interior(&t, &all), all);
    }

    #[test]
    fn transfer_identity() {
        let t = fixtures::tree_a();
        let all: BTreeSet<NodeId> = t.node_ids().into_iter().collect();
        let rep = verify_transfer(&t, &t, &NodeRelation::identity(&t), &all, &all, &ratio(1, 8), &ratio(1, 8)).unwrap();
        assert!(rep.hypotheses_hold, "{rep:?}");
        assert_eq!((rep.cb_k, rep.cb_f, rep.conclusion), (Some(2), Some(2), Some(true)));

        let mut r = NodeRelation::identity(&t);
        r.pairs.remove(&("0".parse().unwrap(), "0".parse().unwrap()));
        let rep = verify_transfer(&t, &t, &r, &all, &all, &ratio(1, 8), &ratio(1, 8)).unwrap();
        assert!(!rep.relation_closed.holds && rep.conclusion.is_none());
    }

    #[test]
    fn node_ids_round_trip() {
        let id: NodeId = "0.1.2".parse().unwrap();
        assert_eq!(id.to_string(), "0.1.2");
        assert_eq!(id.parent().unwrap().to_string(), "0.1");
        assert!("0..1".parse::<NodeId>().is_err());
    }
}
