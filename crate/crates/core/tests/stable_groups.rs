mod common;

use common::GroupTable;
use contologic::fixtures;
use contologic::groups::{audit_approx_product, check_group, invariant_metric, translate_copy, ApproxProduct};
use contologic::metric::set_distance;
use contologic::rational::ratio;
use contologic::{MetricTable, PointSet, Rational, TruthValue};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn bi_invariant(g: &GroupTable, d: &MetricTable) -> bool {
    let n = g.n;
    (0..n).all(|x| {
        (0..n).all(|y| {
            let base = d.d(x, y);
            d.d(g.inv(x), g.inv(y)) == base
                && (0..n).all(|z| d.d(g.m(z, x), g.m(z, y)) == base && d.d(g.m(x, z), g.m(y, z)) == base)
        })
    })
}

#[test]
fn catalogue_is_made_of_groups() {
    let mut r = common::rng(1);
    for g in GroupTable::catalogue() {
        let metric = common::random_metric(&mut r, g.n, 8);
        assert!(check_group(&g.with_metric(&metric, None)).passed, "{}", g.name);
    }
}

#[test]
fn c4skew_becomes_uniform() {
    let g = fixtures::c4skew();
    let table = GroupTable::cyclic(4);
    let brute = common::brute_invariant(&table, g.metric());
    let inv = invariant_metric(&g).unwrap();
    for x in 0..4 {
        for y in 0..4 {
            assert_eq!(inv.metric.d(x, y), &brute[x][y]);
            let want = if x == y { TruthValue::zero() } else { TruthValue::ratio(1, 2) };
            assert_eq!(inv.metric.d(x, y), &want);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn invariant_metric_matches_enumeration(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let cat = GroupTable::catalogue();
        let table = cat.choose(&mut r).unwrap();
        let metric = common::random_metric(&mut r, table.n, 8);
        let g = table.with_metric(&metric, None);
        let out = invariant_metric(&g).unwrap();
        let brute = common::brute_invariant(table, &metric);
        for x in 0..table.n {
            for y in 0..table.n {
                prop_assert_eq!(out.metric.d(x, y), &brute[x][y]);
                prop_assert!(out.metric.d(x, y) >= metric.d(x, y));
            }
        }
        prop_assert!(bi_invariant(table, &out.metric));
        prop_assert!(common::is_pseudometric(table.n, |x, y| out.metric.d(x, y).value().clone()));
    }

    #[test]
    fn translates_stay_far_and_spread(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let cat: Vec<GroupTable> = GroupTable::catalogue().into_iter().filter(|g| g.n >= 2).collect();
        let table = cat.choose(&mut r).unwrap();
        let metric = if table.abelian && r.gen_bool(0.5) {
            table.norm_metric(&mut r)
        } else {
            common::random_metric(&mut r, table.n, 8)
        };
        let gen = r.gen_range(0..table.n);
        let h = table.generated(gen);
        prop_assume!(h.len() < table.n);
        let g = table.with_metric(&metric, Some(&h));
        let probe = ApproxProduct::exact(g.clone(), ratio(1, 1)).unwrap();
        let eps = audit_approx_product(&probe).worst_gap.into_inner();
        let ap = ApproxProduct::exact(g, eps.clone()).unwrap();
        prop_assert!(audit_approx_product(&ap).certified);
        let outside: Vec<usize> = (0..table.n).filter(|a| !h.contains(a)).collect();
        let y0 = *outside.choose(&mut r).unwrap();
        let to_h = h.iter().map(|&a| metric.d(a, y0).clone()).min().unwrap();
        let rv = to_h.value() * ratio(1, 2);
        let (z, rep) = translate_copy(&ap, y0, &rv, &eps).unwrap();
        let want: PointSet = h.iter().map(|&a| table.m(y0, a)).collect();
        prop_assert_eq!(&z, &want);
        let dist = set_distance(&metric, &h, &z).unwrap();
        let lowered: Rational = &rv - &eps;
        prop_assert!(dist.value() > &lowered);
        let hs: Vec<usize> = h.iter().copied().collect();
        let zs: Vec<usize> = z.iter().copied().collect();
        prop_assert!(common::brute_separation(&metric, &zs, &lowered) >= common::brute_separation(&metric, &hs, &rv));
        prop_assert!(rep.far && rep.separation_transfers);
    }
}
