use std::collections::BTreeMap;

use affine_core::sample::{self, FormulaGen};
use affine_core::scalar::rat;
use affine_core::structures::{self, all_tuples, quotient, Assignment, FiniteStructure};
use affine_core::syntax::Signature;
use affine_core::types::{self, FormulaBasis, TypeVector};
use affine_core::ultramean::{self, Charge};
use affine_core::Rational;
use num_traits::{Signed, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scope() -> Vec<String> {
    vec!["x".into(), "y".into()]
}

fn assignment(vars: &[String], points: &[usize]) -> Assignment {
    vars.iter().cloned().zip(points.iter().copied()).collect()
}

/// Adds a copy of point `k` at distance zero from it.
fn duplicate(m: &FiniteStructure, k: usize, sig: &Signature) -> FiniteStructure {
    let n = m.len();
    let pi = |i: usize| if i == n { k } else { i };
    let mut out = FiniteStructure::from_fn(n + 1, |i, j| m.dist(pi(i), pi(j)).clone()).unwrap();
    for (c, &p) in m.constants() {
        out.set_constant(c, p).unwrap();
    }
    for s in sig.symbols() {
        if let Some(t) = m.function(&s.name) {
            let values = all_tuples(n + 1, t.arity)
                .map(|a| m.apply_function(&s.name, &a.iter().map(|&i| pi(i)).collect::<Vec<_>>()).unwrap())
                .collect();
            out.set_function(&s.name, t.arity, values).unwrap();
        }
        if let Some(t) = m.relation(&s.name) {
            let values = all_tuples(n + 1, t.arity)
                .map(|a| m.relation_value(&s.name, &a.iter().map(|&i| pi(i)).collect::<Vec<_>>()).unwrap().clone())
                .collect();
            out.set_relation(&s.name, t.arity, values).unwrap();
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn values_stay_within_the_bound(seed in any::<u64>()) {
        let sig = sample::test_signature();
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let m = sample::random_structure(&mut r, &sig, 4, 6);
        let phi = FormulaGen { sig: &sig, depth: 2, size: 10 }.formula(&mut r, &scope());
        let bound = phi.bound();
        for t in all_tuples(m.len(), 2) {
            let v = structures::eval(&m, &phi, &assignment(&scope(), &t), 1).unwrap();
            prop_assert!(v.abs() <= bound, "{phi}: |{v}| > {bound}");
        }
    }

    #[test]
    fn formulas_are_lipschitz(seed in any::<u64>()) {
        let sig = sample::test_signature();
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let m = sample::random_structure(&mut r, &sig, 4, 6);
        let phi = FormulaGen { sig: &sig, depth: 2, size: 10 }.formula(&mut r, &scope());
        let lip = phi.lipschitz(&sig).unwrap();
        let tuples: Vec<Vec<usize>> = all_tuples(m.len(), 2).collect();
        let values: Vec<Rational> =
            tuples.iter().map(|t| structures::eval(&m, &phi, &assignment(&scope(), t), 1).unwrap()).collect();
        for (a, va) in tuples.iter().zip(&values) {
            for (b, vb) in tuples.iter().zip(&values) {
                let d = std::cmp::max(m.dist(a[0], b[0]).clone(), m.dist(a[1], b[1]).clone());
                prop_assert!((va - vb).abs() <= &lip * d, "{phi} with constant {lip}");
            }
        }
    }

    #[test]
    fn quotient_preserves_values(seed in any::<u64>()) {
        let sig = sample::test_signature();
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let m = sample::random_structure(&mut r, &sig, 3, 6);
        let k = r.gen_range(0..m.len());
        let big = duplicate(&m, k, &sig);
        prop_assert!(structures::validate(&big, &sig).unwrap().is_valid());
        let q = quotient(&big);
        prop_assert_eq!(q.structure.len(), m.len());
        let phi = FormulaGen { sig: &sig, depth: 2, size: 10 }.formula(&mut r, &scope());
        for t in all_tuples(big.len(), 2) {
            let v = structures::eval(&big, &phi, &assignment(&scope(), &t), 1).unwrap();
            let classes: Vec<usize> = t.iter().map(|&a| q.class_of[a]).collect();
            let w = structures::eval(&q.structure, &phi, &assignment(&scope(), &classes), 1).unwrap();
            prop_assert_eq!(v, w);
        }
    }

    #[test]
    fn ultramean_identity(seed in any::<u64>(), raw in prop::collection::vec(0u8..5, 1..=3)) {
        prop_assume!(raw.iter().any(|&w| w > 0));
        let total: i64 = raw.iter().map(|&w| w as i64).sum();
        let mu = Charge::from_weights(raw.iter().map(|&w| rat(w as i64, total)).collect()).unwrap();
        let sig = sample::test_signature();
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let family: Vec<FiniteStructure> = raw.iter().map(|_| sample::random_structure(&mut r, &sig, 3, 6)).collect();
        let mean = ultramean::ultramean(&family, &mu, 1).unwrap();
        let phi = FormulaGen { sig: &sig, depth: 2, size: 8 }.formula(&mut r, &["x".to_string()]);
        let report = ultramean::check_identity(&family, &mean, &phi, 1).unwrap();
        prop_assert!(report.holds(), "{phi}: {:?}", report.mismatch);
    }

    #[test]
    fn restriction_is_affine(seed in any::<u64>(), raw in prop::collection::vec(1u8..5, 2..=4)) {
        let sig = sample::test_signature();
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let family: Vec<FiniteStructure> = (0..2).map(|_| sample::random_structure(&mut r, &sig, 3, 6)).collect();
        let gen = FormulaGen { sig: &sig, depth: 1, size: 6 };
        let formulas = (0..4).map(|_| gen.formula(&mut r, &["x".to_string()])).collect();
        let basis = FormulaBasis::new(vec!["x".into()], formulas, &family).unwrap();
        let sub = basis.select(&[2, 0]);
        let poly = types::type_polytope(&family, &basis).unwrap();
        let total: i64 = raw.iter().map(|&w| w as i64).sum();
        let parts: Vec<(TypeVector, Rational)> = raw
            .iter()
            .map(|&w| (poly.generators[r.gen_range(0..poly.generators.len())].clone(), rat(w as i64, total)))
            .collect();
        let combined = types::restrict_type(&TypeVector::combine(parts.clone()), &basis, &sub).unwrap();
        let restricted: Vec<(TypeVector, Rational)> =
            parts.into_iter().map(|(p, w)| (types::restrict_type(&p, &basis, &sub).unwrap(), w)).collect();
        prop_assert_eq!(combined.values, TypeVector::combine(restricted).values);
    }

    #[test]
    fn logic_distance_is_at_most_the_metric(seed in any::<u64>()) {
        let sig = sample::test_signature();
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let m = sample::random_structure(&mut r, &sig, 4, 6);
        let gen = FormulaGen { sig: &sig, depth: 1, size: 6 };
        let formulas = (0..3).map(|_| gen.formula(&mut r, &["x".to_string()])).collect();
        let basis = FormulaBasis::new(vec!["x".into()], formulas, std::slice::from_ref(&m)).unwrap();
        let tp: BTreeMap<usize, Vec<Rational>> = (0..m.len())
            .map(|a| {
                let asg = assignment(&["x".to_string()], &[a]);
                (a, basis.formulas.iter().map(|f| structures::eval(&m, f, &asg, 1).unwrap()).collect())
            })
            .collect();
        for a in 0..m.len() {
            for b in 0..m.len() {
                let d = types::logic_distance(&tp[&a], &tp[&b], &m, &basis).unwrap();
                prop_assert!(d <= *m.dist(a, b));
                prop_assert!(!d.is_negative());
                if tp[&a] == tp[&b] {
                    prop_assert!(d.is_zero());
                }
            }
        }
    }
}
