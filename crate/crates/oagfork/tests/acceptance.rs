//! Acceptance run: one line per criterion, nonzero exit on any failure.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::Zero;
use rand::Rng;

use common::*;
use oagfork::block_theory::{is_separated, normalize, Phase, pplus_rays, ray_relation, val_blocks};
use oagfork::congruence::{
    finite_index_condition, in_all_levels, infinite_index_condition, ltype_equal, stabilization_bound, tuple_bound, unary_bound,
    IntegerLattice,
};
use oagfork::cut_analysis::{cut_profile, trapped_by_search, unary_cut_independent, ConvexSubgroupDescriptor};
use oagfork::extension_space::{classify_block, strong_extensions, weakly_orthogonal};
use oagfork::goldens;
use oagfork::lex_linear::{fm_eliminate, feasible, system_feasible, Atom, LinearForm, Rel};
use oagfork::numberfield::{poly_mul, FieldElement, FieldSpec};
use oagfork::oag_model::{combination, ArchClass, Ambient, GroupElement, SpanHandle};
use oagfork::rational::{q, qf, Q};
use oagfork::sample::{Limits, Sampler};
use oagfork::selftest::measure_violation;
use oagfork::verdict::{decide_cut_independence, decide_forking, free_subtuple};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn er(e: oagfork::OagError) -> String {
    e.to_string()
}

// ------------------------------------------------------------- criterion 1

fn orthogonality_golden() -> Outcome {
    let s = goldens::load("orthogonality").map_err(er)?;
    let amb = &s.ambient;
    let a = s.a_span().map_err(er)?;
    let p: Vec<_> = s.c.iter().map(|c| cut_profile(amb, c, &a)).collect::<Result<_, _>>().map_err(er)?;
    let k = amb.nslots();
    ensure(p[1].g == p[2].g, || format!("G(c2) = {} but G(c3) = {}", p[1].g, p[2].g))?;
    ensure(p[1].h == p[2].h, || format!("H(c2) = {} but H(c3) = {}", p[1].h, p[2].h))?;
    ensure(p[0].g == ConvexSubgroupDescriptor::type_below(k), || format!("G(c1) = {} is not the infinitesimals", p[0].g))?;
    ensure(p[0].h == ConvexSubgroupDescriptor::vee_below(k), || format!("H(c1) = {} is not trivial", p[0].h))?;
    ensure(p[0].is_archimedean() && p[1].is_archimedean(), || "c1 and c2 must be Archimedean".into())?;
    let r = p[2].ramifier.as_ref().ok_or("c3 is not ramified")?;
    ensure(r.a.is_zero(), || format!("ramifier of c3 is {}", amb.describe(&r.a)))?;
    ensure(weakly_orthogonal(amb, &s.c[1..2], &s.c[0..1], &a).map_err(er)?, || "c2, c1 not weakly orthogonal".into())?;
    ensure(weakly_orthogonal(amb, &s.c[1..2], &s.c[2..3], &a).map_err(er)?, || "c2, c3 not weakly orthogonal".into())?;
    Ok(format!("G(c2)=G(c3)={}, H(c2)=H(c3)={}, G(c1)={}, H(c1)={}", p[1].g, p[1].h, p[0].g, p[0].h))
}

// ------------------------------------------------------------- criterion 2

fn extension_counts() -> Outcome {
    let s = goldens::load("ramified_pair").map_err(er)?;
    let amb = &s.ambient;
    let (a, b) = (s.a_span().map_err(er)?, s.b_span().map_err(er)?);
    let one = classify_block(amb, &s.c[..1], &a, &b).map_err(er)?;
    let two = classify_block(amb, &s.c[1..], &a, &b).map_err(er)?;
    let pair = classify_block(amb, &s.c, &a, &b).map_err(er)?;
    let n1 = one.sub_blocks[0].invariant_extension_count;
    let n2 = two.sub_blocks[0].invariant_extension_count;
    ensure(n1 == 1 && n2 == 2, || format!("counts {n1}, {n2}; expected 1, 2"))?;
    ensure(pair.strong_extension_count == pair.free.len() + 1, || "pair count is not |J|+1".into())?;
    ensure(pair.strong_extension_count == 1, || format!("pair has {} strong extensions", pair.strong_extension_count))?;
    ensure(strong_extensions(&pair).map_err(er)?.len() == 1, || "pair plans disagree with the count".into())?;
    Ok(format!("c1: {n1}, c2: {n2}, pair: |J|+1 = {}", pair.strong_extension_count))
}

// ------------------------------------------------------------- criterion 3

fn example_scenes() -> Outcome {
    for name in ["infinitesimal_base", "two_root_field"] {
        let v = decide_forking(&goldens::load(name).map_err(er)?).map_err(er)?;
        ensure(v.independent.forking, || format!("{name} is not independent"))?;
    }
    let t = goldens::load("trapped_interval").map_err(er)?;
    let v = decide_forking(&t).map_err(er)?;
    ensure(!v.independent.forking, || "trapped_interval is independent".into())?;
    let w = v.condition1.witness.ok_or("no witness")?;
    let root2 = &t.b[0];
    let upper = root2.add(&t.a[1]);
    ensure(w.interval.low == *root2 && w.interval.high == upper, || {
        format!("witness [{}, {}]", t.ambient.describe(&w.interval.low), t.ambient.describe(&w.interval.high))
    })?;

    // d = f(c) for free pairs f; b = d1 - f1(sqrt2, sqrt3) + f2(sqrt2, sqrt3)
    let s = goldens::load("two_root_field").map_err(er)?;
    let amb = &s.ambient;
    let eps = ArchClass::Slot(1);
    let mut sampler = Sampler::new(3);
    let mut tried = 0;
    while tried < 50 {
        let f: Vec<Vec<Q>> = (0..2).map(|_| (0..2).map(|_| q(sampler.int(5))).collect()).collect();
        if &f[0][0] * &f[1][1] == &f[0][1] * &f[1][0] {
            continue;
        }
        tried += 1;
        let d1 = combination(&f[0], &s.c, amb.dim());
        let d2 = combination(&f[1], &s.c, amb.dim());
        let b = d1.sub(&combination(&f[0], &s.b, amb.dim())).add(&combination(&f[1], &s.b, amb.dim()));
        let mut gens = s.b.clone();
        gens.push(d1.clone());
        let bd1 = SpanHandle::new(amb, &gens).map_err(er)?;
        ensure(bd1.contains(&b), || "b is not in the span of B and d1".into())?;
        ensure(amb.arch_class(&d2.sub(&b)) == eps, || format!("class of d2 - b is {:?}", amb.arch_class(&d2.sub(&b))))?;
        let mut agens = s.a.clone();
        agens.push(d1.clone());
        let ad1 = SpanHandle::new(amb, &agens).map_err(er)?;
        // independence over span(A, d1) would keep the infinitesimal class inside G
        let g_small = cut_profile(amb, &d2, &ad1).map_err(er)?.g;
        let g_large = cut_profile(amb, &d2, &bd1).map_err(er)?.g;
        ensure(g_small.contains_class(eps) && !g_large.contains_class(eps), || format!("G over A d1 = {g_small}, over B d1 = {g_large}"))?;
    }
    Ok(format!("two examples independent, witness [sqrt2, sqrt2 + c2], class of d2 - b checked on {tried} free pairs"))
}

// ------------------------------------------------------------- criterion 4

fn random_rows(sampler: &mut Sampler, n: usize) -> Vec<Row> {
    let m = sampler.rng().gen_range(1..=6);
    (0..m)
        .map(|_| {
            let strict = match sampler.rng().gen_range(0..5) {
                0 => None,
                1 | 2 => Some(true),
                _ => Some(false),
            };
            Row { coeffs: (0..n).map(|_| q(sampler.int(4))).collect(), constant: q(sampler.int(4)), strict }
        })
        .collect()
}

fn fm_check(sampler: &mut Sampler) -> Result<(), String> {
    let field = FieldSpec::rationals();
    let n = sampler.rng().gen_range(1..=3);
    let rows = random_rows(sampler, n);
    let sys = to_system(&rows, n);
    let oracle = feasible_by_vertices(&rows, n).is_some();
    let got = system_feasible(&field, &sys).map_err(er)?;
    ensure(got == oracle, || format!("feasibility {got} vs oracle {oracle} on\n{}", sys.dump()))?;
    // projection: a point of the kept unknowns satisfies the eliminated
    // system iff the original system is feasible at that point
    let elim: Vec<usize> = (0..n).filter(|_| sampler.rng().gen_bool(0.5)).collect();
    let keep: Vec<usize> = (0..n).filter(|v| !elim.contains(v)).collect();
    let proj = fm_eliminate(&field, &sys, &elim).map_err(er)?;
    for pt in all_vectors(5, keep.len()) {
        let mut x = vec![Q::zero(); n];
        for (v, p) in keep.iter().zip(&pt) {
            x[*v] = qf(p - 2, 1);
        }
        let fixed: Vec<Row> = rows
            .iter()
            .map(|r| Row {
                coeffs: elim.iter().map(|&v| r.coeffs[v].clone()).collect(),
                constant: &r.constant + keep.iter().map(|&v| &r.coeffs[v] * &x[v]).sum::<Q>(),
                strict: r.strict,
            })
            .collect();
        let inside = feasible_by_vertices(&fixed, elim.len()).is_some();
        ensure(system_holds(&proj, &x) == inside, || format!("projection disagrees at {x:?} on\n{}", sys.dump()))?;
    }
    Ok(())
}

fn lex_grid_check(sampler: &mut Sampler, amb: &Ambient) -> Result<(), String> {
    let dirs: Vec<GroupElement> = (0..3).map(|_| sampler.element(amb, 3)).collect();
    let rels = [Rel::Lt, Rel::Le, Rel::Gt, Rel::Ge, Rel::Eq];
    let atoms: Vec<Atom> = (0..sampler.rng().gen_range(1..=3))
        .map(|_| {
            let f = LinearForm::var(0, dirs[sampler.rng().gen_range(0..3)].scale(&q(sampler.int(2))))
                .add(&LinearForm::var(1, dirs[sampler.rng().gen_range(0..3)].clone()))
                .sub(&LinearForm::constant(sampler.element(amb, 3)));
            Atom::new(f, rels[sampler.rng().gen_range(0..rels.len())].clone())
        })
        .collect();
    let verdict = feasible(amb, 2, &atoms).map_err(er)?;
    let grid: Vec<Q> = (-12..=12).map(|k| qf(k, 4)).collect();
    for x in &grid {
        for y in &grid {
            let t = [x.clone(), y.clone()];
            if atoms.iter().all(|a| a.holds(amb, &t).unwrap()) {
                return ensure(verdict.is_sat(), || format!("grid point {t:?} satisfies atoms declared infeasible"));
            }
        }
    }
    Ok(())
}

/// Tuples in which some member is a multiple of another up to lower-order terms.
fn planted_tuple(sampler: &mut Sampler, amb: &Ambient) -> Vec<GroupElement> {
    let n = sampler.rng().gen_range(2..=3);
    let mut out = vec![sampler.element(amb, 4)];
    for _ in 1..n {
        if sampler.rng().gen_bool(0.6) {
            let base = out[sampler.rng().gen_range(0..out.len())].clone();
            let lead = amb.leading_slot(&base).unwrap_or(0);
            let mut noise = sampler.element(amb, 4);
            for s in 0..=lead {
                for j in amb.slot_range(s) {
                    noise.coords[j] = Q::zero();
                }
            }
            out.push(base.scale(&q(sampler.nonzero_int(3))).add(&noise));
        } else {
            out.push(sampler.element(amb, 4));
        }
    }
    out
}

fn separation_check(sampler: &mut Sampler, amb: &Ambient, cs: &[GroupElement], span: &SpanHandle) -> Result<usize, String> {
    let oracle = separated_by_search(amb, cs, span, 6);
    let mut nonsep = 0;
    for (i, level) in [1u8, 2, 3].into_iter().enumerate() {
        let got = is_separated(amb, cs, span, level).map_err(er)?;
        let _ = sampler;
        let ctx = || {
            let shown: Vec<String> = cs.iter().map(|c| amb.describe(c)).collect();
            let basis: Vec<String> = span.basis().iter().map(|c| amb.describe(c)).collect();
            format!("level {level}: tuple {shown:?} over {basis:?}")
        };
        // the search is bounded, so larger witnesses of the engine are replayed instead
        match (&oracle[i], got.separated) {
            (Ok(()), true) | (Err(_), false) => {}
            (Err(w), true) => return Err(format!("{}: search found {w:?}, engine says separated", ctx())),
            (Ok(()), false) => {}
        }
        if let Some(lam) = &got.combination {
            ensure(is_drop(amb, cs, span, lam, level), || format!("{}: engine combination {lam:?} is no drop", ctx()))?;
        } else if !got.separated {
            ensure(got.member_in_span.is_some_and(|j| span.contains(&cs[j])), || format!("{}: no witness", ctx()))?;
        }
        nonsep += usize::from(!got.separated);
    }
    Ok(nonsep)
}

fn oracle_equivalence() -> Outcome {
    let mut sampler = Sampler::new(2024);
    let lim = Limits::default();
    let scenes = 500;
    let mut nonsep = 0;
    for i in 0..scenes {
        fm_check(&mut sampler).map_err(|e| format!("scene {i}: {e}"))?;
        let s = sampler.scene(&lim);
        let amb = &s.ambient;
        lex_grid_check(&mut sampler, amb).map_err(|e| format!("scene {i}: {e}"))?;
        let (a, b) = (s.a_span().map_err(er)?, s.b_span().map_err(er)?);
        let cs = if i % 2 == 0 { planted_tuple(&mut sampler, amb) } else { s.c.clone() };
        let span = if i % 3 == 0 { &b } else { &a };
        nonsep += separation_check(&mut sampler, amb, &cs, span).map_err(|e| format!("scene {i}: {e}"))?;
        let trapped = trapped_by_search(amb, &s.c[0], &a, &b).map_err(er)?;
        let by_class = decide_cut_independence(amb, &a, &b, &s.c[..1]).map_err(er)?;
        ensure(trapped != by_class.independent, || format!("scene {i}: trapping search and class criterion disagree"))?;
    }
    Ok(format!("{scenes} scenes: FM, projections, lex grid, separatedness ({nonsep} non-separated cases), unary trapping"))
}

// ------------------------------------------------------------- criterion 5

fn monomial(sampler: &mut Sampler, amb: &Ambient, slot: usize) -> GroupElement {
    let mut e = sampler.element(amb, 3);
    for s in (0..amb.nslots()).filter(|&s| s != slot) {
        for j in amb.slot_range(s) {
            e.coords[j] = Q::zero();
        }
    }
    let r = amb.slot_range(slot);
    if r.clone().all(|j| e.coords[j].is_zero()) {
        e.coords[r.start] = q(1);
    }
    e
}

/// Bases missing some classes and tuples sharing leading parts, so that the
/// descent and refinement loops have work to do.
fn loop_input(sampler: &mut Sampler) -> (Ambient, Vec<GroupElement>, Vec<GroupElement>, Vec<GroupElement>) {
    let amb = sampler.ambient(4);
    let k = amb.nslots();
    let mut a = Vec::new();
    for s in 0..k {
        if sampler.rng().gen_bool(0.5) {
            a.push(monomial(sampler, &amb, s));
        }
    }
    let mut b = a.clone();
    for _ in 0..sampler.rng().gen_range(1..=2) {
        let s = sampler.rng().gen_range(0..k);
        let mut e = monomial(sampler, &amb, s);
        if sampler.rng().gen_bool(0.5) {
            let t = sampler.rng().gen_range(s..k);
            e = e.add(&monomial(sampler, &amb, t));
        }
        b.push(e);
    }
    let lead = sampler.element(&amb, 3);
    let n = sampler.rng().gen_range(2..=4);
    let c = (0..n)
        .map(|_| {
            let mut e = lead.scale(&q(sampler.int(2)));
            for _ in 0..sampler.rng().gen_range(1..=2) {
                let t = sampler.rng().gen_range(0..k);
                e = e.add(&monomial(sampler, &amb, t));
            }
            e
        })
        .collect();
    (amb, a, b, c)
}

fn termination_measures() -> Outcome {
    let mut sampler = Sampler::new(55);
    let lim = Limits::default();
    let (mut runs, mut looped) = (0, 0);
    let mut steps = [0usize; 4];
    let mut attempts = 0;
    while runs < 1000 {
        attempts += 1;
        if attempts > 20_000 {
            return Err(format!("only {runs} usable inputs"));
        }
        let (amb, a, b, cs) = if runs % 2 == 0 {
            loop_input(&mut sampler)
        } else {
            let s = sampler.scene(&lim);
            (s.ambient.clone(), s.a.clone(), s.b.clone(), planted_tuple(&mut sampler, &s.ambient))
        };
        let a = SpanHandle::new(&amb, &a).map_err(er)?;
        let mut bgens = a.basis().to_vec();
        bgens.extend(b);
        let b = SpanHandle::new(&amb, &bgens).map_err(er)?;
        let idx = free_subtuple(&amb, &cs, &a).map_err(er)?;
        if idx.len() < 2 {
            continue;
        }
        let free: Vec<GroupElement> = idx.iter().map(|&i| cs[i].clone()).collect();
        let nf = normalize(&amb, &free, &a, &b).map_err(|e| format!("run {runs}: {e}"))?;
        if let Some(msg) = measure_violation(&nf.trace) {
            return Err(format!("run {runs}: {msg}"));
        }
        let rec = nf.recover(&amb).map_err(er)?;
        ensure(rec == free, || format!("run {runs}: transform does not round-trip"))?;
        // the last replacement at each position is what the output keeps
        let mut last: std::collections::BTreeMap<usize, &Vec<Q>> = Default::default();
        for t in &nf.trace {
            last.insert(t.replaced, &t.with);
        }
        ensure(last.values().all(|w| nf.matrix.contains(w)), || format!("run {runs}: a final replacement is missing from the transform"))?;
        runs += 1;
        for t in &nf.trace {
            steps[t.phase as usize] += 1;
        }
        looped += nf.trace.iter().filter(|t| matches!(t.phase, Phase::Descent | Phase::Refine)).count();
    }
    ensure(steps[0] > 0 && steps[3] > 0, || format!("loops never ran: {steps:?}"))?;
    Ok(format!(
        "{runs} runs; steps descent {}, separate {}, split {}, refine {}; {looped} loop steps checked and every final replacement kept, no violations",
        steps[0], steps[1], steps[2], steps[3]
    ))
}

// ------------------------------------------------------------- criterion 6

fn random_vec(sampler: &mut Sampler, m: usize, h: i64) -> Vec<i64> {
    (0..m).map(|_| sampler.int(h)).collect()
}

fn lattice_of(gens: &[Vec<i64>], m: usize) -> IntegerLattice {
    IntegerLattice::new(&gens.iter().map(|g| to_big(g)).collect::<Vec<_>>(), m)
}

fn basis_i64(l: &IntegerLattice) -> Vec<Vec<i64>> {
    l.basis.iter().map(|v| to_i64(v)).collect()
}

fn infinite_oracle(c: &[Vec<i64>], lower: &IntegerLattice, upper: &IntegerLattice, l: u64, bound: u32) -> bool {
    let m = lower.m;
    (1..=bound).all(|n| {
        let qn = (l as i64).pow(n);
        let lo = ModSubgroup::generated(&basis_i64(lower), qn, m);
        let up = ModSubgroup::generated(&basis_i64(upper), qn, m);
        all_vectors(qn, c.len()).all(|u| {
            let z = lin_comb(c, &u, m);
            !up.contains(&z) || lo.contains(&z)
        })
    })
}

fn ltype_oracle(x: &[i64], y: &[i64], s: &IntegerLattice, l: u64, bound: u32) -> bool {
    let m = s.m;
    (1..=bound).all(|n| {
        let qn = (l as i64).pow(n);
        let sub = ModSubgroup::generated(&basis_i64(s), qn, m);
        (0..n).all(|j| {
            let f = (l as i64).pow(j);
            let xj: Vec<i64> = x.iter().map(|v| v * f).collect();
            let yj: Vec<i64> = y.iter().map(|v| v * f).collect();
            let (xin, yin) = (sub.contains(&xj), sub.contains(&yj));
            let same = xj.iter().zip(&yj).all(|(a, b)| (a - b).rem_euclid(qn) == 0);
            (!xin && !yin) || (same && xin && yin)
        })
    })
}

fn congruence_brute_force() -> Outcome {
    let mut sampler = Sampler::new(66);
    let instances = 300;
    let mut failing = 0;
    for i in 0..instances {
        let l: u64 = if sampler.rng().gen_bool(0.5) { 2 } else { 3 };
        let big_n: u32 = sampler.rng().gen_range(1..=4);
        let m = sampler.rng().gen_range(1..=3);
        let k = sampler.rng().gen_range(1..=3);
        let h = 4;
        let na = sampler.rng().gen_range(0..=2);
        let nb = sampler.rng().gen_range(0..=2);
        let ga: Vec<Vec<i64>> = (0..na).map(|_| random_vec(&mut sampler, m, h)).collect();
        let mut gb = ga.clone();
        gb.extend((0..nb).map(|_| random_vec(&mut sampler, m, h)));
        let c: Vec<Vec<i64>> = (0..k).map(|_| random_vec(&mut sampler, m, h)).collect();
        let cb: Vec<Vec<BigInt>> = c.iter().map(|v| to_big(v)).collect();
        let lower = lattice_of(&ga, m);
        let upper = lattice_of(&gb, m);
        let ctx = || format!("instance {i}: l={l} N={big_n} lower={ga:?} upper={gb:?} c={c:?}");

        for z in &c {
            for n in 1..=big_n {
                let qn = (l as i64).pow(n);
                let oracle = ModSubgroup::generated(&basis_i64(&lower), qn, m).contains(z);
                ensure(lower.contains_mod(&to_big(z), l, n) == oracle, || format!("{}: membership of {z:?} mod {l}^{n}", ctx()))?;
            }
        }
        let inf = infinite_index_condition(&cb, &lower, &upper, l, big_n).map_err(er)?;
        ensure(inf.holds == infinite_oracle(&c, &lower, &upper, l, big_n), || format!("{}: infinite-index condition", ctx()))?;
        if let Some((u, n)) = &inf.witness {
            let z = lin_comb(&c, &to_i64(u), m);
            let qn = (l as i64).pow(*n);
            ensure(
                ModSubgroup::generated(&basis_i64(&upper), qn, m).contains(&z) && !ModSubgroup::generated(&basis_i64(&lower), qn, m).contains(&z),
                || format!("{}: witness does not verify", ctx()),
            )?;
        }
        let fin = finite_index_condition(&cb, &lower, l, big_n).map_err(er)?;
        let qn = (l as i64).pow(big_n);
        let fin_oracle = c.iter().all(|z| ModSubgroup::generated(&basis_i64(&lower), qn, m).contains(z));
        ensure(fin.holds == fin_oracle, || format!("{}: finite-index condition", ctx()))?;
        failing += usize::from(!inf.holds) + usize::from(!fin.holds);
        let (x, y) = (&c[0], &c[c.len() - 1]);
        let lt = ltype_equal(&to_big(x), &to_big(y), &lower, l, big_n).map_err(er)?;
        ensure(lt == ltype_oracle(x, y, &lower, l, big_n), || format!("{}: l-type equality", ctx()))?;

        // the stabilization bound: two more levels never change a verdict
        let star = tuple_bound(l, &cb, &lower, &upper, m);
        let at = |b: u32| -> Result<(bool, bool), String> {
            Ok((
                infinite_index_condition(&cb, &lower, &upper, l, b).map_err(er)?.holds,
                finite_index_condition(&cb, &lower, l, b).map_err(er)?.holds,
            ))
        };
        let base = at(star)?;
        ensure(at(star + 1)? == base && at(star + 2)? == base, || format!("{}: verdict flips beyond N* = {star}", ctx()))?;
        if (l as i64).pow(star + 2) <= 81 {
            ensure(infinite_oracle(&c, &lower, &upper, l, star + 2) == base.0, || format!("{}: brute force at N*+2", ctx()))?;
        }
        let ub = unary_bound(l, &to_big(x), &to_big(y), &lower);
        let lt_star = ltype_equal(&to_big(x), &to_big(y), &lower, l, ub).map_err(er)?;
        ensure(lt_star == ltype_equal(&to_big(x), &to_big(y), &lower, l, ub + 2).map_err(er)?, || format!("{}: l-type flips", ctx()))?;
        if (l as i64).pow(ub + 2) <= 243 {
            ensure(lt_star == ltype_oracle(x, y, &lower, l, ub + 2), || format!("{}: l-type brute force beyond the bound", ctx()))?;
        }
        for z in &cb {
            let mut with = lower.basis.clone();
            with.push(z.clone());
            let nb = stabilization_bound(l, &[lower.basis.clone(), with], m);
            let exact = in_all_levels(z, &lower, l);
            ensure(exact == finite_index_condition(std::slice::from_ref(z), &lower, l, nb + 2).map_err(er)?.holds, || {
                format!("{}: exact all-level membership of {z:?}", ctx())
            })?;
        }
    }
    Ok(format!("{instances} instances, {failing} failing conditions, all matching enumeration"))
}

// ------------------------------------------------------------- criterion 7

fn structural_suite() -> Outcome {
    let mut sampler = Sampler::new(77);
    let lim = Limits::default();
    let mut counts = [0usize; 4];
    for i in 0..500 {
        let s = sampler.scene(&lim);
        let amb = &s.ambient;
        let (a, b) = (s.a_span().map_err(er)?, s.b_span().map_err(er)?);
        let ctx = |what: &str| format!("scene {i}: {what}");
        let x = sampler.element(amb, 4);
        let y = sampler.element(amb, 4);
        // val1 ultrametric
        let k1 = |e: &GroupElement| key_of_point(amb, e, &a, 1);
        ensure(k1(&x.add(&y)) <= k1(&x).max(k1(&y)), || ctx("val1 ultrametric"))?;
        let px = cut_profile(amb, &x, &a).map_err(er)?;
        let py = cut_profile(amb, &y, &a).map_err(er)?;
        ensure(px.h <= px.g && py.h <= py.g, || ctx("H <= G"))?;
        if !px.member && px.g < py.g {
            counts[0] += 1;
            ensure(px.g < py.h, || {
                ctx(&format!("G(x) < G(y) without G(x) < H(y); x {} member {} G {} H {}, y {} member {} G {} H {}", amb.describe(&x), px.member, px.g, px.h, amb.describe(&y), py.member, py.g, py.h))
            })?;
        }
        // monotonicity under base extension for independent points
        if unary_cut_independent(amb, &x, &a, &b).map_err(er)?.independent && !a.contains(&x) {
            counts[1] += 1;
            let pb = cut_profile(amb, &x, &b).map_err(er)?;
            if !pb.member {
                ensure(pb.h >= px.h && pb.g <= px.g, || ctx("H grows and G shrinks over the larger base"))?;
            }
        }
        // translation by a span element
        if let Some(t) = a.basis().first() {
            let shifted = cut_profile(amb, &x.add(&t.scale(&q(sampler.nonzero_int(3)))), &a).map_err(er)?;
            ensure(
                shifted.g == px.g && shifted.h == px.h && shifted.distance == px.distance && shifted.side == px.side && shifted.stab_classes == px.stab_classes,
                || ctx("cut data changed under translation"),
            )?;
        }
        // rays against third-level separatedness on ramified blocks
        let cs = planted_tuple(&mut sampler, amb);
        let dec = val_blocks(amb, &cs, &b, 3).map_err(er)?;
        for blk in &dec.blocks {
            if blk.key.archimedean != Some(false) || blk.members.len() < 2 {
                continue;
            }
            let members: Vec<GroupElement> = blk.members.iter().map(|&j| cs[j].clone()).collect();
            let free = ray_relation(&pplus_rays(amb, &members, &b).map_err(er)?).is_none();
            let sep = is_separated(amb, &members, &b, 3).map_err(er)?.separated;
            counts[2] += 1;
            ensure(free == sep, || ctx("ray freeness differs from separatedness"))?;
        }
    }
    // verdict invariance and equivalence structure on the shipped scenes
    for (name, _) in goldens::ALL {
        let g = goldens::load(name).map_err(er)?;
        let v = decide_forking(&g).map_err(er)?;
        for _ in 0..100 {
            let t = sampler.interdefinable(&g);
            let w = decide_forking(&t).map_err(er)?;
            counts[3] += 1;
            ensure(w.independent == v.independent, || format!("{name}: verdict changed under a transform"))?;
            let i = &w.independent;
            ensure(i.forking == i.dividing && i.dividing == i.bounded_orbit && (!i.invariant || i.forking), || format!("{name}: structure"))?;
        }
    }
    Ok(format!(
        "500 scenes; {} ordered G pairs, {} independent base extensions, {} ramified blocks, {} transformed verdicts",
        counts[0], counts[1], counts[2], counts[3]
    ))
}

// ------------------------------------------------------------- criterion 8

fn number_field_soundness() -> Outcome {
    let fields: Vec<(Vec<Q>, Q, Q, Vec<Q>)> = vec![
        (vec![q(-2), q(0), q(1)], q(1), q(2), vec![q(-2), q(0), q(1)]),
        (vec![q(-2), q(0), q(0), q(1)], q(1), q(2), vec![q(-2), q(0), q(0), q(1)]),
        (vec![q(1), q(0), q(-10), q(0), q(1)], q(3), q(4), vec![q(1), q(0), q(-10), q(0), q(1)]),
        // reducible: (x^2 - 2)(x - 5), embedding at sqrt 2
        (poly_mul(&[q(-2), q(0), q(1)], &[q(-5), q(1)]), q(1), q(2), vec![q(-2), q(0), q(1)]),
    ];
    let mut sampler = Sampler::new(88);
    let (mut checked, mut inconclusive, mut zeros) = (0, 0, 0);
    for i in 0..1000 {
        let (p, lo, hi, _) = &fields[i % fields.len()];
        let f = FieldSpec::new(p.clone(), lo.clone(), hi.clone()).map_err(er)?;
        let deg = f.degree();
        let coeffs: Vec<Q> = (0..deg).map(|_| qf(sampler.int(100), sampler.rng().gen_range(1..=100))).collect();
        let e = FieldElement::from_coeffs(coeffs.clone());
        let got = f.sign(&e).map_err(er)?;
        match numeric_sign(p, lo, hi, &coeffs) {
            Some(s) => {
                checked += 1;
                ensure(s == got, || format!("element {e}: sign {got:?}, numerics {s:?}"))?;
            }
            None => inconclusive += 1,
        }
        ensure(f.sign(&e.neg()).map_err(er)? == got.reverse(), || format!("sign of -{e}"))?;
    }
    for i in 0..200 {
        let (p, lo, hi, factor) = &fields[i % fields.len()];
        let f = FieldSpec::new(p.clone(), lo.clone(), hi.clone()).map_err(er)?;
        let mult: Vec<Q> = (0..3).map(|_| q(sampler.int(100))).collect();
        if mult.iter().all(|x| x.is_zero()) {
            continue;
        }
        let planted = f.element(poly_mul(factor, &mult));
        zeros += 1;
        ensure(f.sign(&planted).map_err(er)? == std::cmp::Ordering::Equal, || format!("planted zero {planted} not detected"))?;
    }
    // close rational approximations of sqrt 2 must still be told apart from it
    let f = FieldSpec::new(vec![q(-2), q(0), q(1)], q(1), q(2)).map_err(er)?;
    let (mut p0, mut q0) = (BigInt::from(1), BigInt::from(1));
    for _ in 0..60 {
        let e = FieldElement::from_coeffs(vec![Q::new(p0.clone(), q0.clone()), q(-1)]);
        let expect = numeric_sign(f.minpoly(), lo_of(&f), hi_of(&f), e.coeffs()).ok_or("near-zero not resolved at 50 digits")?;
        ensure(f.sign(&e).map_err(er)? == expect, || "convergent sign".into())?;
        let np = &p0 + 2 * &q0;
        q0 = &p0 + &q0;
        p0 = np;
    }
    Ok(format!("{checked} numeric comparisons ({inconclusive} inconclusive), {zeros} planted zeros, 60 convergents"))
}

fn lo_of(f: &FieldSpec) -> &Q {
    f.interval().0
}

fn hi_of(f: &FieldSpec) -> &Q {
    f.interval().1
}

// ------------------------------------------------------------------ driver

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 8] = [
        ("orthogonality golden", Duration::from_secs(1), orthogonality_golden),
        ("invariant-extension counts", Duration::from_secs(1), extension_counts),
        ("example scenes", Duration::from_secs(5), example_scenes),
        ("oracle equivalence", Duration::from_secs(300), oracle_equivalence),
        ("termination measures", Duration::from_secs(300), termination_measures),
        ("congruence brute force", Duration::from_secs(120), congruence_brute_force),
        ("structural invariants", Duration::from_secs(300), structural_suite),
        ("number-field soundness", Duration::from_secs(30), number_field_soundness),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let took = start.elapsed();
        let result = result.and_then(|d| if took > *limit { Err(format!("{d}; took {took:.2?}, limit {limit:?}")) } else { Ok(d) });
        match result {
            Ok(detail) => println!("criterion {}: PASS {name} ({took:.2?}): {detail}", i + 1),
            Err(e) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({took:.2?}): {e}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
