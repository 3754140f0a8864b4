//! Unary cut analysis over a span: stabilizer classes, the bracketing convex
//! subgroups, ramifiers, leaning and cut-independence with explicit witnesses.
//!
//! Convex subgroups are recorded against the finite slot chain. A subgroup is
//! "all elements whose leading slot is at least `floor`", together with a flavor:
//! `Type` for an intersection of intervals from above, `Vee` for a union from
//! below. On equal floors the `Vee` subgroup is the smaller one.

use std::cmp::Ordering;
use std::fmt;

use num_traits::{One, Signed};
use serde::Serialize;

use crate::error::{OagError, Result};
use crate::lex_linear::{self, Atom, Feasibility, LinearForm, Rel};
use crate::oag_model::{combination, descend, filtration, Ambient, ArchClass, GroupElement, SpanHandle};
use crate::rational::Q;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    Vee,
    Type,
}

/// Convex subgroup `{x : leading slot of x >= floor}` with a closure flavor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ConvexSubgroupDescriptor {
    pub floor: usize,
    pub flavor: Flavor,
}

impl Ord for ConvexSubgroupDescriptor {
    fn cmp(&self, o: &Self) -> Ordering {
        o.floor.cmp(&self.floor).then(self.flavor.cmp(&o.flavor))
    }
}

impl PartialOrd for ConvexSubgroupDescriptor {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl ConvexSubgroupDescriptor {
    pub fn type_below(floor: usize) -> Self {
        ConvexSubgroupDescriptor { floor, flavor: Flavor::Type }
    }

    pub fn vee_below(floor: usize) -> Self {
        ConvexSubgroupDescriptor { floor, flavor: Flavor::Vee }
    }

    pub fn contains_class(&self, c: ArchClass) -> bool {
        match c {
            ArchClass::Zero => true,
            ArchClass::Slot(s) => s >= self.floor,
        }
    }

    /// The classes of a chain (slot indices) lying in the subgroup.
    pub fn classes(&self, chain: &[usize]) -> Vec<usize> {
        chain.iter().copied().filter(|&s| s >= self.floor).collect()
    }
}

impl fmt::Display for ConvexSubgroupDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fl = match self.flavor {
            Flavor::Type => "type",
            Flavor::Vee => "vee",
        };
        write!(f, "{fl}(slots >= {})", self.floor)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Positive,
    Negative,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ramifier {
    pub a: GroupElement,
    pub delta: ArchClass,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CutProfile {
    pub member: bool,
    /// Least class of `d - a` over span elements `a`.
    pub distance: ArchClass,
    /// Best approximation of `d` from the span.
    pub approx: GroupElement,
    pub stab_classes: Vec<ArchClass>,
    pub g: ConvexSubgroupDescriptor,
    pub h: ConvexSubgroupDescriptor,
    pub ramifier: Option<Ramifier>,
    pub side: Option<Side>,
}

impl CutProfile {
    pub fn is_archimedean(&self) -> bool {
        !self.member && self.ramifier.is_none()
    }

    pub fn is_ramified(&self) -> bool {
        self.ramifier.is_some()
    }

    pub fn delta(&self) -> Option<ArchClass> {
        self.ramifier.as_ref().map(|r| r.delta)
    }
}

/// Stabilizer test for one span class: no span point strictly between `d` and `d + |rep|`.
fn class_stabilizes(amb: &Ambient, d: &GroupElement, rep: &GroupElement, span: &SpanHandle) -> Result<bool> {
    let rep = amb.abs(rep)?;
    let basis = span.basis();
    let mut a = LinearForm::constant(amb.zero());
    for (i, b) in basis.iter().enumerate() {
        a = a.add(&LinearForm::var(i, b.clone()));
    }
    let atoms = [
        Atom::new(LinearForm::constant(d.clone()).sub(&a), Rel::Lt),
        Atom::new(a.sub(&LinearForm::constant(d.add(&rep))), Rel::Lt),
    ];
    Ok(!lex_linear::feasible(amb, basis.len(), &atoms)?.is_sat())
}

/// Full unary profile of `d` over the span.
pub fn cut_profile(amb: &Ambient, d: &GroupElement, span: &SpanHandle) -> Result<CutProfile> {
    amb.check_dim(d)?;
    let k = amb.nslots();
    let desc = descend(amb, d, span);
    let Some(m) = desc.class.slot() else {
        return Ok(CutProfile {
            member: true,
            distance: ArchClass::Zero,
            approx: d.clone(),
            stab_classes: Vec::new(),
            g: ConvexSubgroupDescriptor::type_below(k),
            h: ConvexSubgroupDescriptor::vee_below(k),
            ramifier: None,
            side: None,
        });
    };
    let mut stab = Vec::new();
    let mut seen = Vec::new();
    for &s in span.pivot_slots() {
        if seen.contains(&s) {
            continue;
        }
        seen.push(s);
        let rep = &span.rows_in_slot(s)[0];
        if class_stabilizes(amb, d, rep, span)? {
            stab.push(ArchClass::Slot(s));
        }
    }
    stab.sort();
    // the probe must agree with the class description: stabilizing classes are those below the distance
    let mut expected: Vec<ArchClass> = seen.iter().filter(|&&s| s > m).map(|&s| ArchClass::Slot(s)).collect();
    expected.sort();
    if stab != expected {
        return Err(OagError::internal("stabilizer probe disagrees with the class computation"));
    }
    let h = match stab.last() {
        Some(ArchClass::Slot(s)) => ConvexSubgroupDescriptor::vee_below(*s),
        _ => ConvexSubgroupDescriptor::vee_below(k),
    };
    let ramified = !span.has_class(m);
    let (g, ramifier, side) = if ramified {
        let delta_min = seen.iter().copied().filter(|&s| s < m).max();
        let g = match delta_min {
            Some(s) => ConvexSubgroupDescriptor::type_below(s + 1),
            None => ConvexSubgroupDescriptor::type_below(0),
        };
        let side = match amb.sign(&desc.residue)? {
            Ordering::Greater => Side::Positive,
            _ => Side::Negative,
        };
        (g, Some(Ramifier { a: desc.approx.clone(), delta: ArchClass::Slot(m) }), Some(side))
    } else {
        (ConvexSubgroupDescriptor::type_below(m + 1), None, None)
    };
    debug_assert!(h <= g);
    Ok(CutProfile { member: false, distance: desc.class, approx: desc.approx, stab_classes: stab, g, h, ramifier, side })
}

/// The cut of `d` over the span, as one of its three possible shapes.
#[derive(Clone, Debug, PartialEq)]
pub enum CutDescriptor {
    MemberOfSpan(GroupElement),
    ArchCoset { d: GroupElement, g: ConvexSubgroupDescriptor },
    RamComponent { a: GroupElement, g: ConvexSubgroupDescriptor, h: ConvexSubgroupDescriptor, side: Side },
}

pub fn cut_descriptor(amb: &Ambient, d: &GroupElement, span: &SpanHandle) -> Result<CutDescriptor> {
    let p = cut_profile(amb, d, span)?;
    Ok(if p.member {
        CutDescriptor::MemberOfSpan(d.clone())
    } else if let Some(r) = p.ramifier {
        CutDescriptor::RamComponent { a: r.a, g: p.g, h: p.h, side: p.side.unwrap() }
    } else {
        CutDescriptor::ArchCoset { d: d.clone(), g: p.g }
    })
}

/// Nearest span classes above and below slot `p` (as slot indices).
pub fn window(span: &SpanHandle, p: usize) -> (Option<usize>, Option<usize>) {
    let upper = span.pivot_slots().iter().copied().filter(|&s| s < p).max();
    let lower = span.pivot_slots().iter().copied().filter(|&s| s > p).min();
    (upper, lower)
}

fn check_nested(a: &SpanHandle, b: &SpanHandle) -> Result<()> {
    if !b.contains_span(a) {
        return Err(OagError::config("the smaller parameter span must be contained in the larger"));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Leaning {
    Left,
    Right,
    Both,
    Trapped,
}

/// Which sides of `d` the larger span reaches inside the cut of `d` over the smaller one.
pub fn leaning(amb: &Ambient, d: &GroupElement, a: &SpanHandle, b: &SpanHandle) -> Result<Leaning> {
    check_nested(a, b)?;
    let prof = cut_profile(amb, d, a)?;
    if prof.member {
        return Err(OagError::config("leaning is undefined for members of the smaller span"));
    }
    let (below, above) = witness_sides(amb, d, &prof, a, b)?;
    Ok(match (below, above) {
        (false, false) => Leaning::Both,
        (true, false) => Leaning::Right,
        (false, true) => Leaning::Left,
        (true, true) => Leaning::Trapped,
    })
}

/// Whether the larger span has a point of the cut at or below `d`, and at or above `d`.
fn witness_sides(amb: &Ambient, d: &GroupElement, prof: &CutProfile, a: &SpanHandle, b: &SpanHandle) -> Result<(bool, bool)> {
    let k = amb.nslots();
    let Some(p) = prof.distance.slot() else { return Ok((true, true)) };
    if prof.is_ramified() {
        let (upper, lower) = window(a, p);
        let small = (p..lower.unwrap_or(k)).any(|j| b.has_class(j));
        let large = (upper.map_or(0, |t| t + 1)..=p).any(|j| b.has_class(j));
        return Ok(match prof.side.unwrap() {
            Side::Positive => (small, large),
            Side::Negative => (large, small),
        });
    }
    let desc = descend(amb, d, b);
    let Some(q) = desc.class.slot() else { return Ok((true, true)) };
    if q <= p {
        return Ok((false, false));
    }
    let reach = (p + 1..=q).any(|j| b.has_class(j));
    Ok(match amb.sign(&desc.residue)? {
        Ordering::Greater => (true, reach),
        _ => (reach, true),
    })
}

/// A closed interval with endpoints in the larger span.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalWitness {
    pub low: GroupElement,
    pub high: GroupElement,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnaryIndependence {
    pub independent: bool,
    pub witness: Option<IntervalWitness>,
}

/// Smallest positive integer `n` with `n * |small| > |big|` on their common leading slot.
fn scale_to_exceed(amb: &Ambient, small: &GroupElement, big: &GroupElement) -> Result<Q> {
    let s = amb.leading_slot(small).unwrap();
    let vs = amb.slot_value(small, s);
    let vb = amb.slot_value(big, s);
    let w = Q::new(1.into(), 1024.into());
    let (slo, _) = amb.field().enclose(&vs, &w)?;
    let (blo, bhi) = amb.field().enclose(&vb, &w)?;
    let num = blo.abs().max(bhi.abs());
    let mut n = if slo.abs() > w { (num / slo.abs()).floor() + Q::one() } else { Q::one() };
    let sa = amb.abs(small)?;
    let ba = amb.abs(big)?;
    loop {
        if amb.compare(&sa.scale(&n), &ba)? == Ordering::Greater {
            return Ok(n);
        }
        n = n * Q::from_integer(2.into());
    }
}

fn positive(amb: &Ambient, x: &GroupElement) -> Result<GroupElement> {
    amb.abs(x)
}

/// Closed interval with endpoints in `b` around `d` avoiding `a`, when one exists.
pub fn trapping_interval(amb: &Ambient, d: &GroupElement, a: &SpanHandle, b: &SpanHandle) -> Result<Option<IntervalWitness>> {
    let k = amb.nslots();
    let prof = cut_profile(amb, d, a)?;
    let Some(p) = prof.distance.slot() else { return Ok(None) };
    if let Some(r) = &prof.ramifier {
        let (upper, lower) = window(a, p);
        // nearest b-classes to the distance class, from below and from above
        let j_small = (p..lower.unwrap_or(k)).find(|&j| b.has_class(j));
        let j_large = (upper.map_or(0, |t| t + 1)..=p).rev().find(|&j| b.has_class(j));
        let (Some(js), Some(jl)) = (j_small, j_large) else { return Ok(None) };
        let x = d.sub(&r.a);
        let mut g1 = positive(amb, &b.rows_in_slot(js)[0])?;
        if js == p {
            let n = scale_to_exceed(amb, &x, &g1)?;
            g1 = g1.scale(&(Q::one() / n));
        }
        let mut g2 = positive(amb, &b.rows_in_slot(jl)[0])?;
        if jl == p {
            let n = scale_to_exceed(amb, &g2, &x)?;
            g2 = g2.scale(&n);
        }
        let (low, high) = match prof.side.unwrap() {
            Side::Positive => (r.a.add(&g1), r.a.add(&g2)),
            Side::Negative => (r.a.sub(&g2), r.a.sub(&g1)),
        };
        return Ok(Some(IntervalWitness { low, high }));
    }
    let desc = descend(amb, d, b);
    let Some(q) = desc.class.slot() else {
        return Ok(Some(IntervalWitness { low: d.clone(), high: d.clone() }));
    };
    if q <= p {
        return Ok(None);
    }
    let Some(j) = (p + 1..=q).rev().find(|&j| b.has_class(j)) else { return Ok(None) };
    let x = desc.residue.clone();
    let mut g = positive(amb, &b.rows_in_slot(j)[0])?;
    if j == q {
        let n = scale_to_exceed(amb, &g, &x)?;
        g = g.scale(&n);
    }
    let bstar = desc.approx;
    Ok(Some(match amb.sign(&x)? {
        Ordering::Greater => IntervalWitness { high: bstar.add(&g), low: bstar },
        _ => IntervalWitness { low: bstar.sub(&g), high: bstar },
    }))
}

/// Every closed interval with endpoints in `b` containing `d` meets `a`.
pub fn unary_cut_independent(amb: &Ambient, d: &GroupElement, a: &SpanHandle, b: &SpanHandle) -> Result<UnaryIndependence> {
    check_nested(a, b)?;
    let w = trapping_interval(amb, d, a, b)?;
    Ok(UnaryIndependence { independent: w.is_none(), witness: w })
}

/// Exact confirmation of a witness: endpoints in `b`, `low <= d <= high`, and no point of `a` inside.
pub fn verify_interval_witness(amb: &Ambient, d: &GroupElement, w: &IntervalWitness, a: &SpanHandle, b: &SpanHandle) -> Result<bool> {
    Ok(b.contains(&w.low)
        && b.contains(&w.high)
        && amb.compare(&w.low, d)? != Ordering::Greater
        && amb.compare(d, &w.high)? != Ordering::Greater
        && !lex_linear::interval_meets_span(amb, &w.low, &w.high, a)?)
}

/// A trapped combination of the tuple together with its interval.
#[derive(Clone, Debug, PartialEq)]
pub struct TupleWitness {
    pub lambda: Vec<Q>,
    pub point: GroupElement,
    pub interval: IntervalWitness,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TupleIndependence {
    pub independent: bool,
    pub witness: Option<TupleWitness>,
}

/// Whether every point of `span(a, cs)` is cut-independent from `b` over `a`.
///
/// A combination `l . cs` has distance class exactly slot `p` from `a` iff `l`
/// lies in filtration step `p` but not `p + 1`. Whether such a point is
/// trapped depends only on `p`, the class structure of `a` and `b`, and (for
/// an Archimedean distance) on how close `b` gets, which is again a
/// filtration step. So the search over all combinations is finite.
pub fn tuple_cut_independence(amb: &Ambient, a: &SpanHandle, b: &SpanHandle, cs: &[GroupElement]) -> Result<TupleIndependence> {
    check_nested(a, b)?;
    for c in cs {
        amb.check_dim(c)?;
    }
    let k = amb.nslots();
    let ka = filtration(amb, cs, a);
    let kb = filtration(amb, cs, b);
    let mut found: Option<Vec<Q>> = None;
    for p in 0..k {
        if ka[p].escape(&ka[p + 1]).is_none() {
            continue;
        }
        if a.has_class(p) {
            let mut best: Option<(usize, Vec<Q>)> = None;
            for q in (p + 1..=k).rev() {
                let u = ka[p].intersect(&kb[q]);
                if let Some(l) = u.escape(&ka[p + 1]) {
                    best = Some((q, l));
                    break;
                }
            }
            if let Some((q, l)) = best {
                if q == k || (p + 1..=q).any(|j| b.has_class(j)) {
                    found = Some(l);
                    break;
                }
            }
        } else {
            let (upper, lower) = window(a, p);
            let small = (p..lower.unwrap_or(k)).any(|j| b.has_class(j));
            let large = (upper.map_or(0, |t| t + 1)..=p).any(|j| b.has_class(j));
            if small && large {
                found = ka[p].escape(&ka[p + 1]);
                break;
            }
        }
    }
    let Some(lambda) = found else {
        return Ok(TupleIndependence { independent: true, witness: None });
    };
    let point = combination(&lambda, cs, amb.dim());
    let interval = trapping_interval(amb, &point, a, b)?
        .ok_or_else(|| OagError::internal("class criterion reported a trapped point without an interval"))?;
    Ok(TupleIndependence { independent: false, witness: Some(TupleWitness { lambda, point, interval }) })
}

/// Brute-force style check used in tests and diagnostics: for a given point,
/// decides trapping by the feasibility engine instead of the class criterion.
pub fn trapped_by_search(amb: &Ambient, d: &GroupElement, a: &SpanHandle, b: &SpanHandle) -> Result<bool> {
    if a.contains(d) {
        return Ok(false);
    }
    let prof = cut_profile(amb, d, a)?;
    // left and right witnesses: a point of b in the cut of d on each side
    let side_witness = |below: bool| -> Result<bool> {
        let basis = b.basis();
        let mut y = LinearForm::constant(amb.zero());
        for (i, g) in basis.iter().enumerate() {
            y = y.add(&LinearForm::var(i, g.clone()));
        }
        let dd = LinearForm::constant(d.clone());
        let order = if below { Atom::new(y.sub(&dd), Rel::Le) } else { Atom::new(dd.sub(&y), Rel::Le) };
        let p = prof.distance.slot().unwrap();
        let in_cut = match &prof.ramifier {
            None => Atom::new(y.sub(&dd), Rel::Infinitesimal { slot: p }),
            Some(r) => {
                let (upper, lower) = window(a, p);
                let z = y.sub(&LinearForm::constant(r.a.clone()));
                Atom::new(z, Rel::Window { positive: prof.side == Some(Side::Positive), upper, lower })
            }
        };
        Ok(matches!(lex_linear::feasible(amb, basis.len(), &[order, in_cut])?, Feasibility::Sat(_)))
    };
    Ok(side_witness(true)? && side_witness(false)?)
}
