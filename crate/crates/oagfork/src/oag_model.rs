//! Ordered abelian groups presented as finite lexicographic sums of Archimedean slots.
//!
//! Slot 0 is the most significant. Each slot is the span over the rationals of
//! finitely many real field elements, so a group element is a rational
//! coefficient vector laid out slot by slot.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{OagError, Result};
use crate::linalg::{self, Rref, Row, Subspace};
use crate::numberfield::{FieldElement, FieldSpec};
use crate::rational::Q;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Dense,
    Discrete,
}

/// Archimedean class of an element. `Zero` is the least class; a more
/// significant slot (smaller index) is a larger class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArchClass {
    Zero,
    Slot(usize),
}

impl Ord for ArchClass {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ArchClass::Zero, ArchClass::Zero) => Ordering::Equal,
            (ArchClass::Zero, _) => Ordering::Less,
            (_, ArchClass::Zero) => Ordering::Greater,
            (ArchClass::Slot(i), ArchClass::Slot(j)) => j.cmp(i),
        }
    }
}

impl PartialOrd for ArchClass {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl ArchClass {
    pub fn slot(self) -> Option<usize> {
        match self {
            ArchClass::Zero => None,
            ArchClass::Slot(s) => Some(s),
        }
    }
}

impl Serialize for ArchClass {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl fmt::Display for ArchClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArchClass::Zero => write!(f, "zero"),
            ArchClass::Slot(s) => write!(f, "slot{s}"),
        }
    }
}

/// Dense coefficient vector over the generators of all slots.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupElement {
    pub coords: Vec<Q>,
}

impl GroupElement {
    pub fn zero(dim: usize) -> Self {
        GroupElement { coords: linalg::zero_row(dim) }
    }

    pub fn from_coords(coords: Vec<Q>) -> Self {
        GroupElement { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn is_zero(&self) -> bool {
        linalg::is_zero_row(&self.coords)
    }

    pub fn add(&self, o: &GroupElement) -> GroupElement {
        GroupElement { coords: self.coords.iter().zip(&o.coords).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, o: &GroupElement) -> GroupElement {
        GroupElement { coords: self.coords.iter().zip(&o.coords).map(|(a, b)| a - b).collect() }
    }

    pub fn neg(&self) -> GroupElement {
        GroupElement { coords: self.coords.iter().map(|a| -a).collect() }
    }

    pub fn scale(&self, k: &Q) -> GroupElement {
        GroupElement { coords: linalg::scaled(&self.coords, k) }
    }

    pub fn add_scaled(&mut self, k: &Q, o: &GroupElement) {
        linalg::axpy(&mut self.coords, k, &o.coords);
    }

    /// Nonzero coordinates by index.
    pub fn support(&self) -> BTreeMap<usize, Q> {
        self.coords.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(i, c)| (i, c.clone())).collect()
    }
}

pub fn combination(coeffs: &[Q], elems: &[GroupElement], dim: usize) -> GroupElement {
    let mut out = GroupElement::zero(dim);
    for (c, e) in coeffs.iter().zip(elems) {
        out.add_scaled(c, e);
    }
    out
}

/// The ambient group: field, slot generators and the coordinate layout.
#[derive(Clone, Debug)]
pub struct Ambient {
    field: FieldSpec,
    kind: ModelKind,
    slots: Vec<Vec<FieldElement>>,
    offsets: Vec<usize>,
}

impl Ambient {
    pub fn new(field: FieldSpec, kind: ModelKind, slots: Vec<Vec<FieldElement>>) -> Result<Ambient> {
        if slots.is_empty() {
            return Err(OagError::config("at least one slot is required"));
        }
        let deg = field.degree();
        let mut offsets = vec![0];
        let mut reduced = Vec::with_capacity(slots.len());
        for (s, gens) in slots.into_iter().enumerate() {
            if gens.is_empty() {
                return Err(OagError::config(format!("slot {s} has no generators")));
            }
            let gens: Vec<FieldElement> = gens.into_iter().map(|g| field.element(g.coeffs().to_vec())).collect();
            let rows: Vec<Row> = gens
                .iter()
                .map(|g| (0..deg).map(|i| g.coeffs().get(i).cloned().unwrap_or_default()).collect())
                .collect();
            if Rref::new(&rows, deg).rank() < gens.len() {
                return Err(OagError::config(format!("generators of slot {s} are linearly dependent")));
            }
            offsets.push(offsets[s] + gens.len());
            reduced.push(gens);
        }
        if kind == ModelKind::Discrete {
            let last = reduced.last().unwrap();
            if last.len() != 1 {
                return Err(OagError::config("the unit slot of a discrete group must have exactly one generator"));
            }
            if field.sign(&last[0])? != Ordering::Greater {
                return Err(OagError::config("the unit generator must be positive"));
            }
        }
        Ok(Ambient { field, kind, slots: reduced, offsets })
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn nslots(&self) -> usize {
        self.slots.len()
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn generators(&self, s: usize) -> &[FieldElement] {
        &self.slots[s]
    }

    pub fn slot_range(&self, s: usize) -> std::ops::Range<usize> {
        self.offsets[s]..self.offsets[s + 1]
    }

    /// Number of coordinates belonging to slots strictly before `s`.
    pub fn prefix_len(&self, s: usize) -> usize {
        self.offsets[s]
    }

    pub fn slot_of_coord(&self, j: usize) -> usize {
        self.offsets.partition_point(|&o| o <= j) - 1
    }

    pub fn zero(&self) -> GroupElement {
        GroupElement::zero(self.dim())
    }

    /// The element with coordinate vector `coeffs` in slot `s` and zero elsewhere.
    pub fn in_slot(&self, s: usize, coeffs: &[Q]) -> Result<GroupElement> {
        let r = self.slot_range(s);
        if coeffs.len() != r.len() {
            return Err(OagError::config(format!("slot {s} expects {} coefficients, got {}", r.len(), coeffs.len())));
        }
        let mut e = self.zero();
        e.coords[r].clone_from_slice(coeffs);
        Ok(e)
    }

    /// Builds an element from a sparse slot map, as in scene files.
    pub fn element(&self, parts: &BTreeMap<usize, Vec<Q>>) -> Result<GroupElement> {
        let mut e = self.zero();
        for (&s, coeffs) in parts {
            if s >= self.nslots() {
                return Err(OagError::config(format!("slot {s} out of range (have {})", self.nslots())));
            }
            let part = self.in_slot(s, coeffs)?;
            e = e.add(&part);
        }
        Ok(e)
    }

    /// Designated positive generator of the unit slot in a discrete group.
    pub fn unit(&self) -> Option<GroupElement> {
        match self.kind {
            ModelKind::Dense => None,
            ModelKind::Discrete => {
                let s = self.nslots() - 1;
                Some(self.in_slot(s, &[Q::one()]).expect("unit slot has one generator"))
            }
        }
    }

    pub fn check_dim(&self, x: &GroupElement) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(OagError::config(format!("element has {} coordinates, ambient has {}", x.dim(), self.dim())));
        }
        Ok(())
    }

    pub fn slot_coords<'a>(&self, x: &'a GroupElement, s: usize) -> &'a [Q] {
        &x.coords[self.slot_range(s)]
    }

    pub fn slot_value(&self, x: &GroupElement, s: usize) -> FieldElement {
        let mut v = FieldElement::zero();
        for (c, g) in self.slot_coords(x, s).iter().zip(&self.slots[s]) {
            v = v.add(&g.scale(c));
        }
        v
    }

    /// Most significant slot with a nonzero coordinate.
    pub fn leading_slot(&self, x: &GroupElement) -> Option<usize> {
        x.coords.iter().position(|c| !c.is_zero()).map(|j| self.slot_of_coord(j))
    }

    pub fn arch_class(&self, x: &GroupElement) -> ArchClass {
        match self.leading_slot(x) {
            None => ArchClass::Zero,
            Some(s) => ArchClass::Slot(s),
        }
    }

    pub fn sign(&self, x: &GroupElement) -> Result<Ordering> {
        self.check_dim(x)?;
        for s in 0..self.nslots() {
            let v = self.slot_value(x, s);
            if v.is_zero() {
                continue;
            }
            let sg = self.field.sign(&v)?;
            if sg != Ordering::Equal {
                return Ok(sg);
            }
        }
        Ok(Ordering::Equal)
    }

    pub fn compare(&self, x: &GroupElement, y: &GroupElement) -> Result<Ordering> {
        self.check_dim(y)?;
        self.sign(&x.sub(y))
    }

    /// Absolute value.
    pub fn abs(&self, x: &GroupElement) -> Result<GroupElement> {
        Ok(if self.sign(x)? == Ordering::Less { x.neg() } else { x.clone() })
    }

    pub fn describe(&self, x: &GroupElement) -> String {
        let parts: Vec<String> = (0..self.nslots())
            .filter(|&s| self.slot_coords(x, s).iter().any(|c| !c.is_zero()))
            .map(|s| format!("slot{s}[{}]", self.slot_value(x, s)))
            .collect();
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SpanQuery {
    /// Coordinates over the echelon basis.
    Member(Vec<Q>),
    /// Remainder after eliminating the echelon pivots.
    NonMember(GroupElement),
}

/// The rational span of finitely many elements, in reduced echelon form.
/// Coordinates are ordered slot-major, so each echelon row leads in its pivot slot.
#[derive(Clone, Debug)]
pub struct SpanHandle {
    pub generators: Vec<GroupElement>,
    ech: Rref,
    pivot_slots: Vec<usize>,
}

impl SpanHandle {
    pub fn new(amb: &Ambient, generators: &[GroupElement]) -> Result<SpanHandle> {
        for g in generators {
            amb.check_dim(g)?;
        }
        let rows: Vec<Row> = generators.iter().map(|g| g.coords.clone()).collect();
        let mut ech = Rref::new(&rows, amb.dim());
        ech.rows.truncate(ech.rank());
        let pivot_slots = ech.pivots.iter().map(|&p| amb.slot_of_coord(p)).collect();
        Ok(SpanHandle { generators: generators.to_vec(), ech, pivot_slots })
    }

    pub fn empty(amb: &Ambient) -> SpanHandle {
        SpanHandle::new(amb, &[]).expect("empty span")
    }

    pub fn rank(&self) -> usize {
        self.ech.rank()
    }

    pub fn basis(&self) -> Vec<GroupElement> {
        self.ech.basis().iter().map(|r| GroupElement::from_coords(r.clone())).collect()
    }

    pub fn pivot_slots(&self) -> &[usize] {
        &self.pivot_slots
    }

    pub fn has_class(&self, s: usize) -> bool {
        self.pivot_slots.contains(&s)
    }

    /// Echelon rows whose pivot lies in slot `s`; their slot-`s` parts span the
    /// leading coefficients of span elements of that class.
    pub fn rows_in_slot(&self, s: usize) -> Vec<GroupElement> {
        self.ech
            .basis()
            .iter()
            .zip(&self.pivot_slots)
            .filter(|(_, &ps)| ps == s)
            .map(|(r, _)| GroupElement::from_coords(r.clone()))
            .collect()
    }

    /// Archimedean classes of nonzero span elements with their multiplicities, largest class first.
    pub fn arch_classes(&self) -> Vec<(ArchClass, usize)> {
        let mut m: BTreeMap<usize, usize> = BTreeMap::new();
        for &s in &self.pivot_slots {
            *m.entry(s).or_default() += 1;
        }
        m.into_iter().map(|(s, n)| (ArchClass::Slot(s), n)).collect()
    }

    pub fn contains(&self, x: &GroupElement) -> bool {
        self.ech.contains(&x.coords)
    }

    pub fn query(&self, x: &GroupElement) -> SpanQuery {
        match self.ech.coordinates(&x.coords) {
            Some(c) => SpanQuery::Member(c),
            None => SpanQuery::NonMember(GroupElement::from_coords(self.ech.reduce(&x.coords))),
        }
    }

    pub fn contains_span(&self, other: &SpanHandle) -> bool {
        other.basis().iter().all(|b| self.contains(b))
    }

    pub fn extended(&self, amb: &Ambient, more: &[GroupElement]) -> Result<SpanHandle> {
        let mut g = self.generators.clone();
        g.extend_from_slice(more);
        SpanHandle::new(amb, &g)
    }
}

/// Result of approximating an element from a span, most significant slot first.
#[derive(Clone, Debug)]
pub struct Descent {
    /// Element of the span agreeing with the input as far as possible.
    pub approx: GroupElement,
    /// Input minus `approx`.
    pub residue: GroupElement,
    /// Class of `residue`: the least possible class of `x - d` for `d` in the span.
    pub class: ArchClass,
}

/// Greedy slot-by-slot approximation of `x` by the span. The class of the
/// residue is the minimum over the span of the class of the difference.
pub fn descend(amb: &Ambient, x: &GroupElement, span: &SpanHandle) -> Descent {
    let mut r = x.clone();
    let rows = span.ech.basis();
    for s in 0..amb.nslots() {
        let range = amb.slot_range(s);
        if r.coords[range.clone()].iter().all(|c| c.is_zero()) {
            continue;
        }
        for (row, (&p, &ps)) in rows.iter().zip(span.ech.pivots.iter().zip(&span.pivot_slots)) {
            if ps == s && !r.coords[p].is_zero() {
                let f = -r.coords[p].clone();
                linalg::axpy(&mut r.coords, &f, row);
            }
        }
        if r.coords[range].iter().any(|c| !c.is_zero()) {
            return Descent { approx: x.sub(&r), class: ArchClass::Slot(s), residue: r };
        }
    }
    Descent { approx: x.clone(), residue: r, class: ArchClass::Zero }
}

/// Filtration of coefficient space by distance to a span.
///
/// Entry `s` (for `s` in `0..=k`) is the subspace of coefficient vectors `l`
/// whose combination `sum l_i xs_i` agrees with some span element on all slots
/// before `s`. Entry 0 is everything, entry `k` is `{l : sum l_i xs_i in span}`.
/// The combination has distance class at most slot `s` exactly when `l` lies in entry `s`.
pub fn filtration(amb: &Ambient, xs: &[GroupElement], span: &SpanHandle) -> Vec<Subspace> {
    let r = xs.len();
    let basis = span.ech.basis();
    let mut out = Vec::with_capacity(amb.nslots() + 1);
    for s in 0..=amb.nslots() {
        let plen = if s == amb.nslots() { amb.dim() } else { amb.prefix_len(s) };
        if plen == 0 {
            out.push(Subspace::full(r));
            continue;
        }
        let ncols = r + basis.len();
        let rows: Vec<Row> = (0..plen)
            .map(|j| {
                let mut row: Row = xs.iter().map(|x| x.coords[j].clone()).collect();
                row.extend(basis.iter().map(|b| -b[j].clone()));
                row
            })
            .collect();
        let ker = linalg::kernel(&rows, ncols);
        let proj: Vec<Row> = ker.into_iter().map(|v| v[..r].to_vec()).collect();
        out.push(Subspace::span(&proj, r));
    }
    out
}
