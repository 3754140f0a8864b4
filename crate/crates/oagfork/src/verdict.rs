//! Forking, dividing and invariance verdicts for a scene, and exact type
//! equality of tuples over a span.
//!
//! The order condition is decided on rational spans: the span of `A` (plus the
//! unit in discrete scenes) stands for the divisible hull of the definable
//! closure of `A`. The congruence conditions are decided per declared prime on
//! residue lattices.

use num_bigint::BigInt;

use crate::congruence::{finite_index_condition, in_all_levels, infinite_index_condition, saturate_special, tuple_bound, IntegerLattice, PrimeKind};
use crate::cut_analysis::{tuple_cut_independence, verify_interval_witness, TupleIndependence, TupleWitness};
use crate::error::{OagError, Result};
use crate::intlin::IVec;
use crate::lex_linear::{self, Atom, LinearForm, Rel};
use crate::oag_model::{Ambient, GroupElement, SpanHandle};
use crate::par;
use crate::scene::{PrimeSpec, Scene};

/// Independence of the tuple from `B` over `A` in each of the four senses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Independence {
    pub forking: bool,
    pub dividing: bool,
    pub bounded_orbit: bool,
    pub invariant: bool,
}

/// Order condition: every closed interval of `B'` meeting the span of the tuple meets `A'`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderCondition {
    pub holds: bool,
    pub witness: Option<TupleWitness>,
}

/// Outcome of one congruence condition; the witness is an integer
/// combination of the reduced tuple and the exponent at which it fails.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimeCondition {
    pub l: u64,
    pub holds: bool,
    pub bound: u32,
    pub witness: Option<(IVec, u32)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub independent: Independence,
    pub condition1: OrderCondition,
    /// One entry per infinite-index prime.
    pub condition2: Vec<PrimeCondition>,
    /// One entry per finite-index prime.
    pub invariance_extra: Vec<PrimeCondition>,
    /// Positions of the tuple entries kept after removing those dependent over `A'`.
    pub reduced: Vec<usize>,
    pub notes: Vec<String>,
}

impl Verdict {
    /// The equivalences between the four notions and the conditions.
    pub fn check_structure(&self) -> Result<()> {
        let i = &self.independent;
        let conds = self.condition1.holds && self.condition2.iter().all(|c| c.holds);
        let extra = self.invariance_extra.iter().all(|c| c.holds);
        if i.forking != i.dividing || i.forking != i.bounded_orbit {
            return Err(OagError::internal("forking, dividing and bounded-orbit verdicts differ"));
        }
        if i.forking != conds {
            return Err(OagError::internal("forking verdict does not match the conditions"));
        }
        if i.invariant != (conds && extra) || (i.invariant && !i.forking) {
            return Err(OagError::internal("invariance verdict is inconsistent"));
        }
        Ok(())
    }
}

/// Indices of a maximal subtuple that is free over the span, chosen greedily from the left.
pub fn free_subtuple(amb: &Ambient, cs: &[GroupElement], span: &SpanHandle) -> Result<Vec<usize>> {
    let mut cur = span.clone();
    let mut keep = Vec::new();
    for (i, c) in cs.iter().enumerate() {
        if !cur.contains(c) {
            keep.push(i);
            cur = cur.extended(amb, std::slice::from_ref(c))?;
        }
    }
    Ok(keep)
}

/// Order condition over nested spans, with its witness checked exactly.
pub fn decide_cut_independence(amb: &Ambient, a: &SpanHandle, b: &SpanHandle, cs: &[GroupElement]) -> Result<TupleIndependence> {
    let r = tuple_cut_independence(amb, a, b, cs)?;
    if let Some(w) = &r.witness {
        if !verify_interval_witness(amb, &w.point, &w.interval, a, b)? {
            return Err(OagError::internal("interval witness failed verification"));
        }
    }
    Ok(r)
}

struct PrimeData {
    lower: IntegerLattice,
    upper: IntegerLattice,
    c: Vec<IVec>,
    bound: u32,
}

fn prime_data(scene: &Scene, p: &PrimeSpec, reduced: &[usize]) -> PrimeData {
    let m = p.dim;
    let unit = scene.ambient.unit().map(|_| scene.residue(p, "one"));
    let a: Vec<IVec> = (0..scene.a.len()).map(|i| scene.residue(p, &format!("A{i}"))).collect();
    let mut ab = a.clone();
    ab.extend((0..scene.b.len()).map(|i| scene.residue(p, &format!("B{i}"))));
    let lower = saturate_special(&a, unit.as_ref(), m);
    let upper = saturate_special(&ab, unit.as_ref(), m);
    let c: Vec<IVec> = reduced.iter().map(|i| scene.residue(p, &format!("c{i}"))).collect();
    let bound = p.n_max.or(scene.congruence.n_max).unwrap_or_else(|| tuple_bound(p.l, &c, &lower, &upper, m));
    PrimeData { lower, upper, c, bound }
}

fn prime_conditions(scene: &Scene, reduced: &[usize]) -> Result<(Vec<PrimeCondition>, Vec<PrimeCondition>, Vec<String>)> {
    let primes: Vec<&PrimeSpec> = scene.congruence.primes.iter().filter(|p| p.kind != PrimeKind::Divisible).collect();
    let results = par::map(&primes, |p| -> Result<(PrimeKind, PrimeCondition, Option<String>)> {
        let d = prime_data(scene, p, reduced);
        match p.kind {
            PrimeKind::InfiniteIndex => {
                let r = infinite_index_condition(&d.c, &d.lower, &d.upper, p.l, d.bound)?;
                Ok((p.kind, PrimeCondition { l: p.l, holds: r.holds, bound: r.bound, witness: r.witness }, None))
            }
            _ => {
                let r = finite_index_condition(&d.c, &d.lower, p.l, d.bound)?;
                let exact = d.c.iter().all(|z| in_all_levels(z, &d.lower, p.l));
                let note = (exact != r.holds).then(|| {
                    format!("prime {}: the check up to exponent {} disagrees with the exact test; raise n_max", p.l, d.bound)
                });
                Ok((p.kind, PrimeCondition { l: p.l, holds: r.holds, bound: r.bound, witness: r.witness }, note))
            }
        }
    });
    let mut inf = Vec::new();
    let mut fin = Vec::new();
    let mut notes = Vec::new();
    for r in results {
        let (kind, c, note) = r?;
        if kind == PrimeKind::InfiniteIndex {
            inf.push(c);
        } else {
            fin.push(c);
        }
        notes.extend(note);
    }
    Ok((inf, fin, notes))
}

/// Decide all four independence notions for the scene's tuple.
pub fn decide_forking(scene: &Scene) -> Result<Verdict> {
    let amb = &scene.ambient;
    let a = scene.a_span()?;
    let b = scene.b_span()?;
    let reduced = free_subtuple(amb, &scene.c, &a)?;
    let cs: Vec<GroupElement> = reduced.iter().map(|&i| scene.c[i].clone()).collect();
    let (order, primes) = par::join(|| decide_cut_independence(amb, &a, &b, &cs), || prime_conditions(scene, &reduced));
    let order = order?;
    let (condition2, invariance_extra, mut notes) = primes?;
    if reduced.len() < scene.c.len() {
        notes.push(format!("{} tuple entries are dependent over A' and were dropped", scene.c.len() - reduced.len()));
    }
    let forking = order.independent && condition2.iter().all(|c| c.holds);
    let invariant = forking && invariance_extra.iter().all(|c| c.holds);
    let v = Verdict {
        independent: Independence { forking, dividing: forking, bounded_orbit: forking, invariant },
        condition1: OrderCondition { holds: order.independent, witness: order.witness },
        condition2,
        invariance_extra,
        reduced,
        notes,
    };
    v.check_structure()?;
    Ok(v)
}

/// Whether `x` and `y` have the same type over the span: no span point
/// separates `f(x)` from `f(y)` for any rational combination `f`.
pub fn same_type_over(amb: &Ambient, x: &[GroupElement], y: &[GroupElement], d: &SpanHandle) -> Result<bool> {
    if x.len() != y.len() {
        return Err(OagError::config(format!("tuples of lengths {} and {} cannot share a type", x.len(), y.len())));
    }
    let n = x.len();
    let basis = d.basis();
    let nvars = n + basis.len();
    let mut fx = LinearForm::constant(amb.zero());
    let mut fy = LinearForm::constant(amb.zero());
    for i in 0..n {
        fx = fx.add(&LinearForm::var(i, x[i].clone()));
        fy = fy.add(&LinearForm::var(i, y[i].clone()));
    }
    let mut bd = LinearForm::constant(amb.zero());
    for (j, e) in basis.iter().enumerate() {
        bd = bd.add(&LinearForm::var(n + j, e.clone()));
    }
    let u = fx.sub(&bd);
    let v = fy.sub(&bd);
    let cases = [
        (Rel::Gt, Rel::Lt),
        (Rel::Lt, Rel::Gt),
        (Rel::Eq, Rel::Lt),
        (Rel::Eq, Rel::Gt),
        (Rel::Lt, Rel::Eq),
        (Rel::Gt, Rel::Eq),
    ];
    for (ru, rv) in cases {
        let atoms = [Atom::new(u.clone(), ru), Atom::new(v.clone(), rv)];
        if lex_linear::feasible(amb, nvars, &atoms)?.is_sat() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Residues of the reduced tuple at one prime, for reports.
pub fn reduced_residues(scene: &Scene, p: &PrimeSpec, reduced: &[usize]) -> Vec<Vec<BigInt>> {
    reduced.iter().map(|i| scene.residue(p, &format!("c{i}"))).collect()
}
