mod common;

use contologic::fixtures;
use contologic::forge::{
    approximating_pseudometric, extend_partial_metric, repair_pseudometric, repair_via_sup, stabilization_index,
    uniform_equivalence_modulus,
};
use contologic::metric::Grid;
use contologic::rational::ratio;
use contologic::{Interpolation, PointSet, Rational, TruthValue};
use proptest::prelude::*;
use rand::Rng;

/// `sup_z |φ(x,z) − φ(y,z)|` for three points, written out.
fn sup_oracle(phi: &Grid, x: usize, y: usize) -> Rational {
    let diff = |z: usize| {
        let (a, b) = (phi.get(x, z).value(), phi.get(y, z).value());
        if a > b {
            a - b
        } else {
            b - a
        }
    };
    diff(0).max(diff(1)).max(diff(2))
}

#[test]
fn triphi_sup_repair_matches_enumeration() {
    let s = fixtures::triphi();
    let phi = s.binary_table("phi").unwrap();
    let d = repair_via_sup(s.universe(), &phi).unwrap();
    for x in 0..3 {
        for y in 0..3 {
            assert_eq!(d.d(x, y).value(), &sup_oracle(&phi, x, y));
        }
    }
    assert_eq!(d.d(0, 1), &TruthValue::ratio(5, 8));
    assert_eq!(d.d(1, 2), &TruthValue::ratio(1, 4));
    assert_eq!(d.d(0, 2), &TruthValue::ratio(3, 4));
    assert!(common::is_pseudometric(3, |x, y| d.d(x, y).value().clone()));
}

#[test]
fn triphi_repair_is_pseudometric() {
    let s = fixtures::triphi();
    let phi = s.binary_table("phi").unwrap();
    // the input itself breaks the triangle through q
    assert!(!common::is_pseudometric(3, |x, y| phi.get(x, y).value().clone()));
    for mode in [Interpolation::StepLeft, Interpolation::Linear] {
        let cert = repair_pseudometric(s.universe(), &phi, mode).unwrap();
        assert!(common::is_pseudometric(3, |x, y| cert.table.get(x, y).value().clone()));
        for x in 0..3 {
            for y in 0..3 {
                assert_eq!(cert.table.get(x, y).value(), &cert.h.eval(phi.get(x, y).value()));
            }
        }
    }
}

/// `d2 < Δ(ε) ⇒ d1 < ε` over all pairs, and no larger value at a grid point keeps it.
fn check_modulus(d1: &contologic::MetricTable, d2: &contologic::MetricTable, delta: &contologic::PLMap) {
    let n = d1.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|x| (0..n).map(move |y| (x, y))).collect();
    let grid: Vec<Rational> = d1.positive_values().into_iter().map(TruthValue::into_inner).collect();
    let mut probes = grid.clone();
    for w in grid.windows(2) {
        probes.push((&w[0] + &w[1]) / ratio(2, 1));
    }
    for eps in &probes {
        let bound = delta.eval(eps);
        for &(x, y) in &pairs {
            if d2.d(x, y).value() < &bound {
                assert!(d1.d(x, y).value() < eps);
            }
        }
    }
    for eps in &grid {
        let bound = delta.eval(eps);
        let tight = pairs.iter().any(|&(x, y)| d1.d(x, y).value() >= eps && d2.d(x, y).value() == &bound);
        assert!(tight, "modulus at {eps} is not attained");
    }
}

#[test]
fn equivalence_moduli_are_sound_and_optimal() {
    let mut r = common::rng(7);
    for _ in 0..30 {
        let n = r.gen_range(2..=5);
        let d1 = common::random_metric(&mut r, n, 8);
        let d2 = common::random_metric(&mut r, n, 4);
        let (a, b) = uniform_equivalence_modulus(&d1, &d2).unwrap();
        check_modulus(&d1, &d2, &a);
        check_modulus(&d2, &d1, &b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn repair_certificates_verify(seed in any::<u64>(), separating in any::<bool>()) {
        let mut r = common::rng(seed);
        let n = r.gen_range(1..=6);
        let phi = common::class_lifted_predicate(&mut r, n, separating);
        let labels = common::labels(n);
        let cert = repair_pseudometric(&labels, &phi, Interpolation::StepLeft).unwrap();
        prop_assert!(common::is_pseudometric(n, |x, y| cert.table.get(x, y).value().clone()));
        prop_assert!(cert.h.eval(&ratio(0, 1)) == ratio(0, 1));
        for x in 0..n {
            for y in 0..n {
                let v = phi.get(x, y).value();
                prop_assert!(&cert.h.eval(v) >= v);
            }
        }
        if separating {
            prop_assert!(cert.metric);
        }
    }

    #[test]
    fn approximants_decrease_to_extension(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let n = r.gen_range(2..=6);
        let m = common::random_metric(&mut r, n, 8);
        let set: PointSet = (0..n).filter(|_| r.gen_bool(0.5)).collect();
        let set = if set.is_empty() { [0].into_iter().collect() } else { set };
        let inner = common::random_metric(&mut r, n, 8);
        // ψ₁ agrees with a pseudometric on X and is arbitrary elsewhere
        let psi1 = Grid::from_fn(n, n, |x, y| {
            if set.contains(&x) && set.contains(&y) { inner.d(x, y).clone() } else { common::dyadic(&mut r, 3) }
        });
        let xs: Vec<usize> = set.iter().copied().collect();
        let d1 = Grid::from_fn(xs.len(), xs.len(), |a, b| inner.d(xs[a], xs[b]).clone());
        let phi: Vec<TruthValue> = (0..n)
            .map(|x| if set.contains(&x) { TruthValue::zero() } else { common::dyadic(&mut r, 5) })
            .collect();
        let ext = extend_partial_metric(&m, &set, &d1, &psi1).unwrap();
        let labels = common::labels(n);
        let stable = stabilization_index(&phi);
        let mut prev = approximating_pseudometric(&labels, &set, &psi1, &phi, 0).unwrap();
        for k in 1..=stable + 2 {
            let cur = approximating_pseudometric(&labels, &set, &psi1, &phi, k).unwrap();
            for x in 0..n {
                for y in 0..n {
                    prop_assert!(cur.d(x, y) <= prev.d(x, y));
                }
            }
            if k >= stable {
                prop_assert_eq!(&cur, &ext.pseudometric);
            }
            prev = cur;
        }
    }
}
