//! Engine invariants, driven by seeded scene samplers and small integer strategies.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::Zero;
use proptest::prelude::*;
use rand::Rng;

use oagfork::block_theory::{check_normal_form, normalize, val_blocks, BlockKey};
use oagfork::congruence::{infinite_index_condition, tuple_bound, IntegerLattice};
use oagfork::cut_analysis::cut_profile;
use oagfork::extension_space::{doag_factors, space_descriptor, strong_extensions};
use oagfork::intlin::{from_columns, ivec, snf, IVec};
use oagfork::lex_linear::{feasible, Atom, Feasibility, LinearForm, Rel};
use oagfork::oag_model::{Ambient, GroupElement, SpanHandle};
use oagfork::rational::q;
use oagfork::sample::{Limits, Sampler};
use oagfork::verdict::{decide_cut_independence, decide_forking, free_subtuple, same_type_over};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, failure_persistence: None, ..ProptestConfig::default() }
}

fn ambient_and_elements(seed: u64, n: usize) -> (Ambient, Vec<GroupElement>, Sampler) {
    let mut s = Sampler::new(seed);
    let amb = s.ambient(3);
    let xs = (0..n).map(|_| s.element(&amb, 6)).collect();
    (amb, xs, s)
}

/// An element living only in the least slot, so adding it barely moves a point.
fn tail(s: &mut Sampler, amb: &Ambient) -> GroupElement {
    let last = amb.nslots() - 1;
    let mut e = amb.zero();
    for j in amb.slot_range(last) {
        e.coords[j] = q(s.int(3));
    }
    e
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn sign_is_antisymmetric_and_closed(seed in any::<u64>()) {
        let (amb, xs, _) = ambient_and_elements(seed, 2);
        let (x, y) = (&xs[0], &xs[1]);
        prop_assert_eq!(amb.sign(&x.neg()).unwrap(), amb.sign(x).unwrap().reverse());
        if amb.sign(x).unwrap() == Ordering::Greater && amb.sign(y).unwrap() == Ordering::Greater {
            prop_assert_eq!(amb.sign(&x.add(y)).unwrap(), Ordering::Greater);
        }
        prop_assert_eq!(amb.sign(&amb.zero()).unwrap(), Ordering::Equal);
    }

    #[test]
    fn order_is_total_and_translation_invariant(seed in any::<u64>()) {
        let (amb, xs, _) = ambient_and_elements(seed, 4);
        let (x, y, z, t) = (&xs[0], &xs[1], &xs[2], &xs[3]);
        let c = |a: &GroupElement, b: &GroupElement| amb.compare(a, b).unwrap();
        prop_assert_eq!(c(x, y), c(y, x).reverse());
        prop_assert_eq!(c(&x.add(t), &y.add(t)), c(x, y));
        if c(x, y) != Ordering::Greater && c(y, z) != Ordering::Greater {
            prop_assert_ne!(c(x, z), Ordering::Greater);
        }
    }

    #[test]
    fn archimedean_class_is_ultrametric(seed in any::<u64>(), k in -3i64..=3) {
        let (amb, xs, _) = ambient_and_elements(seed, 2);
        let (x, y) = (&xs[0], &xs[1]);
        let (cx, cy) = (amb.arch_class(x), amb.arch_class(y));
        let sum = amb.arch_class(&x.add(y));
        prop_assert!(sum <= cx.max(cy));
        if cx != cy {
            prop_assert_eq!(sum, cx.max(cy));
        }
        if k != 0 {
            prop_assert_eq!(amb.arch_class(&x.scale(&q(k))), cx);
        }
    }

    #[test]
    fn val1_is_ultrametric_over_a_span(seed in any::<u64>()) {
        let (amb, xs, _) = ambient_and_elements(seed, 3);
        let span = SpanHandle::new(&amb, &xs[2..]).unwrap();
        let key = |e: &GroupElement| {
            if span.contains(e) { None } else { BlockKey::from_profile(&cut_profile(&amb, e, &span).unwrap(), 1) }
        };
        prop_assert!(key(&xs[0].add(&xs[1])) <= key(&xs[0]).max(key(&xs[1])));
    }
}

proptest! {
    #![proptest_config(config(96))]

    #[test]
    fn feasible_witnesses_satisfy_their_atoms(seed in any::<u64>()) {
        let mut s = Sampler::new(seed);
        let amb = s.ambient(3);
        let rels = [Rel::Lt, Rel::Le, Rel::Gt, Rel::Ge, Rel::Eq];
        let atoms: Vec<Atom> = (0..s.rng().gen_range(1..=4))
            .map(|_| {
                let f = LinearForm::var(0, s.element(&amb, 4))
                    .add(&LinearForm::var(1, s.element(&amb, 4)))
                    .sub(&LinearForm::constant(s.element(&amb, 4)));
                let r = rels[s.rng().gen_range(0..rels.len())].clone();
                Atom::new(f, r)
            })
            .collect();
        if let Feasibility::Sat(t) = feasible(&amb, 2, &atoms).unwrap() {
            for a in &atoms {
                prop_assert!(a.holds(&amb, &t).unwrap());
            }
        }
    }

    #[test]
    fn added_class_ignores_translation_by_the_span(seed in any::<u64>(), k in 1i64..=4) {
        let (amb, xs, _) = ambient_and_elements(seed, 3);
        let span = SpanHandle::new(&amb, &xs[1..]).unwrap();
        let d = &xs[0];
        let p = cut_profile(&amb, d, &span).unwrap();
        let moved = d.add(&xs[1].scale(&q(k)));
        let m = cut_profile(&amb, &moved, &span).unwrap();
        prop_assert_eq!(p.delta(), m.delta());
        if let Some(r) = &m.ramifier {
            prop_assert!(span.contains(&r.a));
            prop_assert_eq!(amb.arch_class(&moved.sub(&r.a)), r.delta);
            let other = &p.ramifier.as_ref().unwrap().a;
            prop_assert_eq!(amb.arch_class(&d.sub(other)), r.delta);
        }
    }

    #[test]
    fn valuation_levels_refine_each_other(seed in any::<u64>()) {
        let (amb, xs, _) = ambient_and_elements(seed, 4);
        let span = SpanHandle::new(&amb, &xs[2..]).unwrap();
        let keys: Vec<Option<BlockKey>> = xs[..2]
            .iter()
            .map(|e| BlockKey::from_profile(&cut_profile(&amb, e, &span).unwrap(), 3))
            .collect();
        if let (Some(k0), Some(k1)) = (keys[0], keys[1]) {
            for level in [2u8, 1] {
                if k0.at_level(level + 1) == k1.at_level(level + 1) {
                    prop_assert_eq!(k0.at_level(level), k1.at_level(level));
                }
                if k0.at_level(level + 1) <= k1.at_level(level + 1) {
                    prop_assert!(k0.at_level(level) <= k1.at_level(level));
                }
            }
        }
    }

    #[test]
    fn same_type_is_an_equivalence(seed in any::<u64>()) {
        let (amb, xs, mut s) = ambient_and_elements(seed, 3);
        let span = SpanHandle::new(&amb, &xs[1..]).unwrap();
        let x = vec![xs[0].clone()];
        let y = vec![x[0].add(&tail(&mut s, &amb))];
        let z = vec![y[0].add(&tail(&mut s, &amb))];
        let st = |u: &[GroupElement], v: &[GroupElement]| same_type_over(&amb, u, v, &span).unwrap();
        prop_assert!(st(&x, &x));
        prop_assert_eq!(st(&x, &y), st(&y, &x));
        if st(&x, &y) && st(&y, &z) {
            prop_assert!(st(&x, &z));
        }
    }
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn normal_forms_round_trip_and_hold(seed in any::<u64>()) {
        let mut s = Sampler::new(seed);
        let sc = s.scene(&Limits::default());
        let amb = &sc.ambient;
        let (a, b) = (sc.a_span().unwrap(), sc.b_span().unwrap());
        let idx = free_subtuple(amb, &sc.c, &a).unwrap();
        let cs: Vec<GroupElement> = idx.iter().map(|&i| sc.c[i].clone()).collect();
        if !cs.is_empty() {
            let nf = normalize(amb, &cs, &a, &b).unwrap();
            prop_assert_eq!(nf.recover(amb).unwrap(), cs.clone());
            prop_assert_eq!(nf.apply(amb, &cs), nf.elements.clone());
            let v = decide_forking(&sc).unwrap();
            if v.condition1.holds {
                prop_assert!(check_normal_form(amb, &nf.elements, &nf.index, &a, &b).unwrap().all_hold());
            }
        }
    }

    #[test]
    fn extension_space_is_invariant_under_interdefinable_transforms(seed in any::<u64>()) {
        let mut s = Sampler::new(seed);
        let sc = s.scene(&Limits::default());
        let t = s.interdefinable(&sc);
        let (d, v) = space_descriptor(&sc).unwrap();
        let (e, w) = space_descriptor(&t).unwrap();
        prop_assert_eq!(v.independent, w.independent);
        prop_assert_eq!(d.empty, e.empty);
        prop_assert_eq!(d.finite_size(), e.finite_size());
        prop_assert_eq!(d.factors.len(), e.factors.len());
    }

    #[test]
    fn factors_match_first_valuation_blocks_and_plans_validate(seed in any::<u64>()) {
        let mut s = Sampler::new(seed);
        let sc = s.scene(&Limits::default());
        let amb = &sc.ambient;
        let (a, b) = (sc.a_span().unwrap(), sc.b_span().unwrap());
        let free = free_subtuple(amb, &sc.c, &b).unwrap();
        if free.len() == sc.c.len() && decide_cut_independence(amb, &a, &b, &sc.c).unwrap().independent {
            let (factors, basis) = doag_factors(amb, &sc.c, &a, &b).unwrap();
            let blocks = val_blocks(amb, &basis.elements, &b, 1).unwrap();
            prop_assert_eq!(factors.len(), blocks.blocks.len());
            for f in &factors {
                if let Some(cls) = &f.classification {
                    let plans = strong_extensions(cls).unwrap();
                    prop_assert_eq!(plans.len(), cls.strong_extension_count);
                    for p in &plans {
                        prop_assert!(p.validate().is_ok());
                    }
                }
            }
        }
    }

    #[test]
    fn enlarging_the_base_keeps_dependence(seed in any::<u64>()) {
        let mut s = Sampler::new(seed);
        let sc = s.scene(&Limits::default());
        let v = decide_forking(&sc).unwrap();
        let mut bigger = sc.clone();
        bigger.b.push(s.element(&sc.ambient, 4));
        let w = decide_forking(&bigger).unwrap();
        prop_assert!(v.independent.forking || !w.independent.forking);
        prop_assert!(w.check_structure().is_ok());
    }
}

fn lattice(gens: &[Vec<i64>], m: usize) -> IntegerLattice {
    IntegerLattice::new(&gens.iter().map(|g| ivec(g)).collect::<Vec<_>>(), m)
}

fn small_vecs(count: usize, m: usize) -> impl Strategy<Value = Vec<Vec<i64>>> {
    prop::collection::vec(prop::collection::vec(-6i64..=6, m), count)
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn membership_modulo_powers_is_monotone(gens in small_vecs(2, 3), z in prop::collection::vec(-20i64..=20, 3), l in prop::sample::select(vec![2u64, 3, 5])) {
        let lat = lattice(&gens, 3);
        let z = ivec(&z);
        for n in 1..5 {
            if lat.contains_mod(&z, l, n + 1) {
                prop_assert!(lat.contains_mod(&z, l, n));
            }
        }
    }

    #[test]
    fn smith_invariants_divide_in_chain(cols in small_vecs(3, 3)) {
        let cols: Vec<IVec> = cols.iter().map(|c| ivec(c)).collect();
        let s = snf(&from_columns(&cols, 3), 3, 3);
        for w in s.diag.windows(2) {
            prop_assert!((&w[1] % &w[0]).is_zero());
        }
        prop_assert!(s.diag.iter().all(|d| *d > BigInt::zero()));
    }

    #[test]
    fn congruence_condition_ignores_unimodular_changes(
        lower in small_vecs(1, 2),
        extra in small_vecs(1, 2),
        c in small_vecs(2, 2),
        k in -3i64..=3,
        l in prop::sample::select(vec![2u64, 3]),
    ) {
        let lo = lattice(&lower, 2);
        let mut up_gens = lower.clone();
        up_gens.extend(extra);
        let up = lattice(&up_gens, 2);
        let c: Vec<IVec> = c.iter().map(|v| ivec(v)).collect();
        // (c0, c1) -> (c1, c0 + k c1) is unimodular
        let changed = vec![c[1].clone(), c[0].iter().zip(&c[1]).map(|(a, b)| a + BigInt::from(k) * b).collect()];
        let bound = tuple_bound(l, &c, &lo, &up, 2).max(tuple_bound(l, &changed, &lo, &up, 2));
        let x = infinite_index_condition(&c, &lo, &up, l, bound).unwrap().holds;
        let y = infinite_index_condition(&changed, &lo, &up, l, bound).unwrap().holds;
        prop_assert_eq!(x, y);
    }
}
