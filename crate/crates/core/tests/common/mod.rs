//! Seeded generators and brute-force oracles shared by the integration suites.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use contologic::chains::DescendingChain;
use contologic::groups::FiniteMetricGroup;
use contologic::metric::Grid;
use contologic::rational::ratio;
use contologic::topometric::{NodeId, TreeClusterSpace, TreeNode};
use contologic::{FiniteStructure, MetricTable, PointSet, Rational, TruthValue};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("a{i}")).collect()
}

/// `k / 2^level` with `1 ≤ k ≤ 2^level`.
pub fn dyadic(r: &mut impl Rng, level: u32) -> TruthValue {
    let den = 1i64 << level;
    TruthValue::ratio(r.gen_range(1..=den), den)
}

/// Shortest-path closure of random edge weights `k/den`; separates points.
pub fn random_metric(r: &mut impl Rng, n: usize, den: i64) -> MetricTable {
    let mut d = vec![vec![Rational::from_integer(0.into()); n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let w = ratio(r.gen_range(1..=den), den);
            d[i][j] = w.clone();
            d[j][i] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = &d[i][k] + &d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    MetricTable::from_fn(labels(n), |i, j| TruthValue::new(d[i][j].clone()).unwrap())
}

pub fn random_structure(r: &mut impl Rng, max: usize) -> FiniteStructure {
    let n = r.gen_range(1..=max);
    let den = *[2, 4, 8, 16].choose(r).unwrap();
    FiniteStructure::new(random_metric(r, n, den))
}

/// Exhaustive triangle, symmetry and zero-diagonal check.
pub fn is_pseudometric(n: usize, d: impl Fn(usize, usize) -> Rational) -> bool {
    (0..n).all(|x| {
        d(x, x) == Rational::from_integer(0.into())
            && (0..n).all(|y| d(x, y) == d(y, x) && (0..n).all(|z| d(x, z) <= d(x, y) + d(y, z)))
    })
}

/// Symmetric reflexive dyadic table, constant on the classes of a random partition.
pub fn class_lifted_predicate(r: &mut impl Rng, n: usize, separating: bool) -> Grid {
    let classes = if separating { n } else { r.gen_range(1..=n) };
    let class: Vec<usize> = (0..n).map(|i| if separating { i } else { r.gen_range(0..classes) }).collect();
    let level = r.gen_range(1..=4);
    let mut between = BTreeMap::new();
    for a in 0..classes {
        for b in (a + 1)..classes {
            between.insert((a, b), dyadic(r, level));
        }
    }
    Grid::from_fn(n, n, |x, y| {
        let (a, b) = (class[x].min(class[y]), class[x].max(class[y]));
        if a == b {
            TruthValue::zero()
        } else {
            between[&(a, b)].clone()
        }
    })
}

pub fn brute_distance(m: &MetricTable, set: &PointSet) -> Vec<TruthValue> {
    (0..m.len())
        .map(|x| set.iter().map(|&y| m.d(x, y).clone()).min().unwrap())
        .collect()
}

/// Largest subset of `points` pairwise at distance `> eps`, by subset enumeration.
pub fn brute_separation(m: &MetricTable, points: &[usize], eps: &Rational) -> usize {
    let k = points.len();
    (0u32..(1 << k))
        .filter(|mask| {
            let chosen: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).map(|i| points[i]).collect();
            chosen
                .iter()
                .all(|&a| chosen.iter().all(|&b| a == b || m.d(a, b).value() > eps))
        })
        .map(|mask| mask.count_ones() as usize)
        .max()
        .unwrap_or(0)
}

// ---------- topometric ----------

pub const SCALES: [(i64, i64); 12] = [
    (1, 16),
    (1, 8),
    (3, 16),
    (1, 4),
    (3, 10),
    (5, 16),
    (3, 8),
    (1, 2),
    (5, 8),
    (3, 4),
    (7, 8),
    (1, 1),
];

pub fn eps_grid() -> Vec<Rational> {
    vec![ratio(1, 8), ratio(1, 4), ratio(3, 10), ratio(1, 2)]
}

/// Random tree of the given depth bound with strictly decreasing scales.
pub fn random_tree(r: &mut impl Rng, depth: usize, branch: usize) -> TreeNode {
    fn grow(r: &mut impl Rng, below: usize, depth: usize, branch: usize) -> TreeNode {
        let idx = r.gen_range(0..below);
        let (n, d) = SCALES[idx];
        let kids = if depth == 0 || idx == 0 { 0 } else { r.gen_range(0..=branch) };
        let children = (0..kids).map(|_| grow(r, idx, depth - 1, branch)).collect();
        TreeNode::with_children(ratio(n, d), children)
    }
    grow(r, SCALES.len(), depth, branch)
}

/// Forest whose inter-tree distances lie in `[max(1/2, largest root scale), 1]`.
pub fn random_space(r: &mut impl Rng, max_trees: usize, depth: usize, branch: usize) -> TreeClusterSpace {
    let k = r.gen_range(1..=max_trees);
    let trees: Vec<TreeNode> = (0..k).map(|_| random_tree(r, depth, branch)).collect();
    let floor = trees.iter().map(|t| t.scale.clone()).max().unwrap().max(ratio(1, 2));
    let mut dist = BTreeMap::new();
    for i in 0..k {
        for j in (i + 1)..k {
            let options: Vec<Rational> = SCALES.iter().map(|&(n, d)| ratio(n, d)).filter(|s| *s >= floor).collect();
            let v = options.choose(r).unwrap().clone();
            dist.insert((i, j), TruthValue::new(v).unwrap());
        }
    }
    TreeClusterSpace::new(trees, dist)
}

/// A cardinal: finite or `ω`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Card {
    Finite(usize),
    Omega,
}

impl std::ops::Add for Card {
    type Output = Card;
    fn add(self, o: Card) -> Card {
        match (self, o) {
            (Card::Finite(a), Card::Finite(b)) => Card::Finite(a + b),
            _ => Card::Omega,
        }
    }
}

/// Flattened node list: (id, scale, parent index).
pub fn flat_nodes(t: &TreeClusterSpace) -> Vec<(NodeId, Rational, Option<usize>)> {
    let mut out = Vec::new();
    fn walk(n: &TreeNode, id: NodeId, parent: Option<usize>, out: &mut Vec<(NodeId, Rational, Option<usize>)>) {
        let at = out.len();
        out.push((id.clone(), n.scale.clone(), parent));
        for (k, c) in n.children.iter().enumerate() {
            walk(c, id.child(k), Some(at), out);
        }
    }
    for (i, tree) in t.trees.iter().enumerate() {
        walk(tree, NodeId::root(i), None, &mut out);
    }
    out
}

/// Iterates the ε-derivative of the denoted space restricted to `start`.
///
/// A point of node ν keeps an open ε-finite neighbourhood exactly when ν has
/// no surviving children (isolated) or when its scale is ≤ ε (every point of
/// its cone lies within ε). Otherwise the ω copies of a surviving child are
/// pairwise at distance `s_ν > ε`. Returns the successive derivatives.
pub fn derivative_sequence(t: &TreeClusterSpace, start: &BTreeSet<NodeId>, eps: &Rational) -> Vec<BTreeSet<NodeId>> {
    let nodes = flat_nodes(t);
    let mut seq = vec![start.clone()];
    loop {
        let cur = seq.last().unwrap();
        let next: BTreeSet<NodeId> = nodes
            .iter()
            .enumerate()
            .filter(|(_, (id, s, _))| {
                cur.contains(id)
                    && s > eps
                    && nodes.iter().any(|(c, _, p)| p.map(|p| &nodes[p].0 == id).unwrap_or(false) && cur.contains(c))
            })
            .map(|(_, (id, _, _))| id.clone())
            .collect();
        if next.is_empty() {
            return seq;
        }
        seq.push(next);
    }
}

/// Largest ε-separated family of denoted points in a node set, as a cardinal.
pub fn separated_cardinal(t: &TreeClusterSpace, set: &BTreeSet<NodeId>, eps: &Rational) -> Card {
    let nodes = flat_nodes(t);
    let trees: Vec<usize> = (0..t.trees.len()).filter(|&i| set.contains(&NodeId::root(i))).collect();
    let per_tree: Vec<Card> = trees
        .iter()
        .map(|&i| {
            let branching = nodes.iter().any(|(id, s, _)| {
                id.tree() == i
                    && set.contains(id)
                    && s > eps
                    && nodes.iter().any(|(c, _, p)| p.map(|p| &nodes[p].0 == id).unwrap_or(false) && set.contains(c))
            });
            if branching {
                Card::Omega
            } else {
                Card::Finite(1)
            }
        })
        .collect();
    let k = trees.len();
    let mut best = Card::Finite(0);
    for mask in 0u32..(1 << k) {
        let chosen: Vec<usize> = (0..k).filter(|b| mask & (1 << b) != 0).collect();
        let separated = chosen.iter().all(|&a| {
            chosen.iter().all(|&b| {
                a == b
                    || t
                        .tree_distance(trees[a], trees[b])
                        .map(|v| v.value() > eps)
                        .unwrap_or(true)
            })
        });
        if separated {
            let total = chosen.iter().fold(Card::Finite(0), |acc, &a| acc + per_tree[a]);
            best = best.max(total);
        }
    }
    best
}

/// `(rank, degree)` of the whole space by the symbolic derivative.
pub fn oracle_rank_degree(t: &TreeClusterSpace, eps: &Rational) -> (Option<usize>, Option<Card>) {
    let all: BTreeSet<NodeId> = flat_nodes(t).into_iter().map(|n| n.0).collect();
    if all.is_empty() {
        return (None, None);
    }
    let seq = derivative_sequence(t, &all, eps);
    let top = seq.last().unwrap();
    (Some(seq.len() - 1), Some(separated_cardinal(t, top, eps)))
}

/// Rank of a set in its own topology (`None` when empty).
pub fn oracle_subspace_rank(t: &TreeClusterSpace, set: &BTreeSet<NodeId>, eps: &Rational) -> Option<usize> {
    if set.is_empty() {
        return None;
    }
    Some(derivative_sequence(t, set, eps).len() - 1)
}

/// Largest rank in the whole space of a point of `set`.
pub fn oracle_ambient_rank(t: &TreeClusterSpace, set: &BTreeSet<NodeId>, eps: &Rational) -> Option<usize> {
    let all: BTreeSet<NodeId> = flat_nodes(t).into_iter().map(|n| n.0).collect();
    let seq = derivative_sequence(t, &all, eps);
    set.iter()
        .map(|id| seq.iter().rposition(|s| s.contains(id)).expect("node of the space"))
        .max()
}

/// A random ancestor-closed node set.
pub fn random_closed_set(r: &mut impl Rng, t: &TreeClusterSpace) -> BTreeSet<NodeId> {
    let nodes = flat_nodes(t);
    let mut keep = BTreeSet::new();
    for (id, _, parent) in &nodes {
        let parent_in = parent.map(|p| keep.contains(&nodes[p].0)).unwrap_or(true);
        if parent_in && r.gen_bool(0.75) {
            keep.insert(id.clone());
        }
    }
    keep
}

// ---------- groups ----------

/// A finite group given by its multiplication table on `0..n`.
#[derive(Debug, Clone)]
pub struct GroupTable {
    pub name: String,
    pub n: usize,
    pub mul: Vec<usize>,
    pub abelian: bool,
}

impl GroupTable {
    pub fn from_fn(name: &str, n: usize, f: impl Fn(usize, usize) -> usize) -> Self {
        let mul: Vec<usize> = (0..n * n).map(|k| f(k / n, k % n)).collect();
        let abelian = (0..n).all(|a| (0..n).all(|b| mul[a * n + b] == mul[b * n + a]));
        GroupTable {
            name: name.to_string(),
            n,
            mul,
            abelian,
        }
    }

    pub fn cyclic(n: usize) -> Self {
        Self::from_fn(&format!("Z{n}"), n, |a, b| (a + b) % n)
    }

    pub fn product(p: usize, q: usize) -> Self {
        Self::from_fn(&format!("Z{p}xZ{q}"), p * q, |a, b| {
            ((a / q + b / q) % p) * q + (a % q + b % q) % q
        })
    }

    /// Dihedral group of order `2k`: `r^i s^j` encoded as `j·k + i`.
    pub fn dihedral(k: usize) -> Self {
        Self::from_fn(&format!("D{k}"), 2 * k, |a, b| {
            let (i1, j1) = (a % k, a / k);
            let (i2, j2) = (b % k, b / k);
            let i = if j1 == 0 { (i1 + i2) % k } else { (i1 + k - i2) % k };
            ((j1 + j2) % 2) * k + i
        })
    }

    pub fn m(&self, a: usize, b: usize) -> usize {
        self.mul[a * self.n + b]
    }

    pub fn inv(&self, a: usize) -> usize {
        (0..self.n).find(|&b| self.m(a, b) == 0).unwrap()
    }

    /// Every group of order ≤ 8 used by the suites.
    pub fn catalogue() -> Vec<GroupTable> {
        let mut v: Vec<GroupTable> = (1..=8).map(Self::cyclic).collect();
        v.push(Self::product(2, 2));
        v.push(Self::product(2, 4));
        v.push(Self::dihedral(3));
        v.push(Self::dihedral(4));
        v
    }

    /// Cyclic subgroup generated by `g`.
    pub fn generated(&self, g: usize) -> PointSet {
        let mut out = PointSet::new();
        let mut x = 0;
        loop {
            if !out.insert(x) {
                return out;
            }
            x = self.m(x, g);
        }
    }

    pub fn with_metric(&self, metric: &MetricTable, carrier: Option<&PointSet>) -> FiniteMetricGroup {
        let l = |a: usize| a.to_string();
        let n = self.n;
        let mut dist = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                dist.push(json!([l(i), l(j), metric.d(i, j).to_string()]));
            }
        }
        let op: Vec<_> = (0..n * n).map(|k| json!([l(k / n), l(k % n), l(self.mul[k])])).collect();
        let inverse: BTreeMap<String, String> = (0..n).map(|a| (l(a), l(self.inv(a)))).collect();
        let mut file = json!({
            "universe": (0..n).map(l).collect::<Vec<_>>(),
            "metric": dist,
            "op": op,
            "identity": "0",
            "inverse": inverse,
        });
        if let Some(c) = carrier {
            file["carrier"] = json!(c.iter().map(|&a| l(a)).collect::<Vec<_>>());
        }
        FiniteMetricGroup::from_json(&file.to_string()).expect("well-formed group file")
    }

    /// `d(x,y) = ‖x⁻¹y‖` for a weighted word norm over a random symmetric
    /// generating set; bi-invariant when the group is abelian.
    pub fn norm_metric(&self, r: &mut impl Rng) -> MetricTable {
        let n = self.n;
        let mut weight = vec![None::<Rational>; n];
        weight[0] = Some(ratio(0, 1));
        for g in 1..n {
            if weight[g].is_none() {
                let w = ratio(r.gen_range(1..=8), 8);
                weight[g] = Some(w.clone());
                weight[self.inv(g)] = Some(w);
            }
        }
        let mut norm: Vec<Rational> = weight.into_iter().map(Option::unwrap).collect();
        // shortest products of generators, capped at 1
        for _ in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let via = &norm[a] + &norm[b];
                    let c = self.m(a, b);
                    if via < norm[c] {
                        norm[c] = via;
                    }
                }
            }
        }
        MetricTable::from_fn(labels(n), |x, y| {
            let v = norm[self.m(self.inv(x), y)].clone();
            TruthValue::new(v.min(ratio(1, 1))).unwrap()
        })
    }
}

/// `max_{u,v} d(u·x·v, u·y·v)` by direct enumeration.
pub fn brute_invariant(g: &GroupTable, d: &MetricTable) -> Vec<Vec<TruthValue>> {
    let n = g.n;
    (0..n)
        .map(|x| {
            (0..n)
                .map(|y| {
                    (0..n)
                        .flat_map(|u| (0..n).map(move |v| (u, v)))
                        .map(|(u, v)| d.d(g.m(g.m(u, x), v), g.m(g.m(u, y), v)).clone())
                        .max()
                        .unwrap()
                })
                .collect()
        })
        .collect()
}

// ---------- chains ----------

/// Random descending chain of nonempty subsets over a random structure.
pub fn random_chain(r: &mut impl Rng, max_points: usize, max_len: usize) -> DescendingChain {
    let s = random_structure(r, max_points);
    let n = s.size();
    let mut current: PointSet = (0..n).collect();
    let mut members = vec![current.clone()];
    let len = r.gen_range(1..=max_len);
    for _ in 1..len {
        let mut next: PointSet = current.iter().copied().filter(|_| r.gen_bool(0.7)).collect();
        if next.is_empty() {
            next.insert(*current.iter().next().unwrap());
        }
        members.push(next.clone());
        current = next;
    }
    DescendingChain::new(s, members).expect("descending by construction")
}

/// One input to the rank-transfer checker.
pub struct TransferCase {
    pub kind: &'static str,
    pub x: TreeClusterSpace,
    pub y: TreeClusterSpace,
    pub r: contologic::topometric::NodeRelation,
    pub k: BTreeSet<NodeId>,
    pub f: BTreeSet<NodeId>,
    pub eps: Rational,
    pub delta: Rational,
}

fn halve(t: &TreeNode) -> TreeNode {
    TreeNode::with_children(&t.scale / ratio(2, 1), t.children.iter().map(halve).collect())
}

fn identity_on(set: &BTreeSet<NodeId>) -> contologic::topometric::NodeRelation {
    contologic::topometric::NodeRelation {
        pairs: set.iter().map(|n| (n.clone(), n.clone())).collect(),
    }
}

/// Identity relations, paddings of the target by extra trees, halved target
/// scales and identities on closed subsets; `K` is drawn inside `F`.
pub fn transfer_case(r: &mut impl Rng) -> TransferCase {
    let x = random_space(r, 2, 3, 2);
    let grid = eps_grid();
    let eps = grid.choose(r).unwrap().clone();
    let below: Vec<Rational> = grid.iter().filter(|d| **d <= eps).cloned().collect();
    let all_x: BTreeSet<NodeId> = x.node_ids().into_iter().collect();
    let (kind, y, rel, delta) = match r.gen_range(0..4) {
        0 => ("identity", x.clone(), identity_on(&all_x), below.choose(r).unwrap().clone()),
        1 => {
            let extra = random_space(r, 2, 3, 2);
            let y = x.disjoint_union(&extra, TruthValue::one());
            ("padding", y, identity_on(&all_x), below.choose(r).unwrap().clone())
        }
        2 => {
            let trees = x.trees.iter().map(halve).collect();
            let y = TreeClusterSpace::new(trees, x.dist.clone());
            ("rescale", y, identity_on(&all_x), &eps / ratio(2, 1))
        }
        _ => {
            let s = random_closed_set(r, &x);
            ("partial", x.clone(), identity_on(&s), below.choose(r).unwrap().clone())
        }
    };
    let f = random_closed_set(r, &y);
    let k: BTreeSet<NodeId> = random_closed_set(r, &x).intersection(&f).cloned().collect();
    TransferCase {
        kind,
        x,
        y,
        r: rel,
        k,
        f,
        eps,
        delta,
    }
}
