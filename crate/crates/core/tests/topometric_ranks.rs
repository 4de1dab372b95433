mod common;

use std::collections::BTreeSet;

use common::Card;
use contologic::fixtures;
use contologic::rational::ratio;
use contologic::topometric::{
    cb_rank_degree, check_space, rank_grid, verify_transfer, NodeId, NodeRelation, TreeClusterSpace, TreeNode,
};
use contologic::TruthValue;
use proptest::prelude::*;

fn agrees_with_oracle(t: &TreeClusterSpace) {
    for eps in common::eps_grid() {
        let rep = cb_rank_degree(t, &eps).unwrap();
        let (rank, degree) = common::oracle_rank_degree(t, &eps);
        assert_eq!(rep.rank, rank, "rank at {eps}");
        assert_eq!(rep.degree.map(Card::Finite), degree, "degree at {eps}");
    }
}

/// Every tree of depth ≤ 3, branching ≤ 2, on a few scale ladders.
fn small_trees() -> Vec<TreeNode> {
    let ladders = [
        [ratio(1, 2), ratio(1, 4), ratio(1, 8), ratio(1, 16)],
        [ratio(1, 1), ratio(3, 10), ratio(1, 4), ratio(1, 8)],
        [ratio(3, 4), ratio(1, 2), ratio(3, 10), ratio(1, 16)],
    ];
    fn shapes(level: usize, ladder: &[contologic::Rational]) -> Vec<TreeNode> {
        let s = ladder[level].clone();
        let mut out = vec![TreeNode::leaf(s.clone())];
        if level + 1 < ladder.len() {
            let kids = shapes(level + 1, ladder);
            for a in &kids {
                out.push(TreeNode::with_children(s.clone(), vec![a.clone()]));
                for b in &kids {
                    out.push(TreeNode::with_children(s.clone(), vec![a.clone(), b.clone()]));
                }
            }
        }
        out
    }
    let mut all = Vec::new();
    for ladder in &ladders {
        all.extend(shapes(0, ladder));
    }
    all
}

#[test]
fn tree_a_fixture() {
    let t = fixtures::tree_a();
    assert!(check_space(&t).passed);
    assert_eq!(cb_rank_degree(&t, &ratio(1, 8)).unwrap().rank, Some(2));
    assert_eq!(cb_rank_degree(&t, &ratio(3, 10)).unwrap().rank, Some(1));
    agrees_with_oracle(&t);
    let two = t.disjoint_union(&t, TruthValue::one());
    let rep = cb_rank_degree(&two, &ratio(1, 8)).unwrap();
    assert_eq!((rep.rank, rep.degree), (Some(2), Some(2)));
    agrees_with_oracle(&two);
}

#[test]
fn enumerated_trees_match_oracle() {
    let trees = small_trees();
    assert!(trees.len() > 100);
    for tree in &trees {
        let t = TreeClusterSpace::uniform(vec![tree.clone()], TruthValue::one());
        assert!(check_space(&t).passed);
        agrees_with_oracle(&t);
    }
    for pair in trees.chunks(2).take(200) {
        // the smallest admissible join keeps some pairs within ε of each other
        let join = pair.iter().map(|t| t.scale.clone()).max().unwrap();
        let t = TreeClusterSpace::uniform(pair.to_vec(), TruthValue::new(join).unwrap());
        agrees_with_oracle(&t);
    }
}

#[test]
fn rank_grid_examples() {
    let g = rank_grid(&fixtures::tree_a(), &ratio(1, 2)).unwrap();
    assert_eq!((g.r_prime.clone(), g.eps.clone()), (ratio(3, 8), ratio(1, 8)));
    assert_eq!(g.trace.iter().map(|s| s.rank).collect::<Vec<_>>(), vec![Some(1), Some(1)]);
}

#[test]
fn identity_transfer_on_tree_a() {
    let t = fixtures::tree_a();
    let all: BTreeSet<NodeId> = t.node_ids().into_iter().collect();
    let rep = verify_transfer(&t, &t, &NodeRelation::identity(&t), &all, &all, &ratio(1, 8), &ratio(1, 8)).unwrap();
    assert!(rep.hypotheses_hold);
    assert_eq!((rep.cb_k, rep.cb_f, rep.conclusion), (Some(2), Some(2), Some(true)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn random_spaces_match_oracle(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let t = common::random_space(&mut r, 3, 3, 2);
        prop_assert!(check_space(&t).passed);
        agrees_with_oracle(&t);
    }

    #[test]
    fn rank_is_antitone_in_eps(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let t = common::random_space(&mut r, 3, 4, 2);
        let mut grid: Vec<_> = common::SCALES.iter().map(|&(n, d)| ratio(n, d)).collect();
        grid.push(ratio(1, 32));
        grid.sort();
        let ranks: Vec<_> = grid.iter().map(|e| cb_rank_degree(&t, e).unwrap().rank).collect();
        prop_assert!(ranks.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn rank_grid_is_short_and_flat(seed in any::<u64>(), num in 1i64..=16) {
        let mut r = common::rng(seed);
        let t = common::random_space(&mut r, 3, 3, 2);
        let top = ratio(num, 16);
        let g = rank_grid(&t, &top).unwrap();
        prop_assert!(g.trace.len() - 1 <= t.scales().len() + 1);
        let zero = ratio(0, 1);
        prop_assert!(zero < g.eps && g.eps < g.r_prime && g.r_prime < top);
        let lower = &g.r_prime - &g.eps;
        prop_assert_eq!(cb_rank_degree(&t, &g.r_prime).unwrap().rank, cb_rank_degree(&t, &lower).unwrap().rank);
    }

    #[test]
    fn degree_adds_over_far_joins(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let eps = common::eps_grid()[(seed % 4) as usize].clone();
        let a = common::random_space(&mut r, 2, 3, 2);
        let target = cb_rank_degree(&a, &eps).unwrap().rank;
        let b = loop {
            let b = common::random_space(&mut r, 2, 3, 2);
            if cb_rank_degree(&b, &eps).unwrap().rank == target {
                break b;
            }
        };
        let joined = a.disjoint_union(&b, TruthValue::one());
        let (ra, rb, rj) = (
            cb_rank_degree(&a, &eps).unwrap(),
            cb_rank_degree(&b, &eps).unwrap(),
            cb_rank_degree(&joined, &eps).unwrap(),
        );
        prop_assert_eq!(rj.rank, ra.rank);
        prop_assert!(rj.degree.unwrap() >= ra.degree.unwrap() + rb.degree.unwrap());
    }
}

#[test]
fn structured_transfers_hold() {
    let mut r = common::rng(11);
    let (mut checked, mut strict) = (0, 0);
    for _ in 0..300 {
        let c = common::transfer_case(&mut r);
        let rep = verify_transfer(&c.x, &c.y, &c.r, &c.k, &c.f, &c.eps, &c.delta).unwrap();
        assert_eq!(rep.cb_k, common::oracle_subspace_rank(&c.x, &c.k, &c.eps), "{}", c.kind);
        assert_eq!(rep.cb_f, common::oracle_ambient_rank(&c.y, &c.f, &c.delta), "{}", c.kind);
        if rep.hypotheses_hold {
            checked += 1;
            assert_eq!(rep.conclusion, Some(true), "{}", c.kind);
            if rep.cb_k < rep.cb_f {
                strict += 1;
            }
        }
    }
    assert!(checked > 100 && strict > 10, "{checked} checked, {strict} strict");
}
