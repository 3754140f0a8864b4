//! Valuations on tuples over a span, block decompositions, separatedness,
//! half-line rays of ramified blocks, and the normal-form pipeline.
//!
//! Everything here works in the coefficient space of a tuple. For a span `D`
//! and tuple `c`, the filtration `K[s]` (see [`filtration`]) holds the
//! coefficient vectors whose combination agrees with `D` before slot `s`; the
//! distance slot of a combination is the largest `s` with the vector in `K[s]`.
//! All three valuations of a combination are functions of its distance slot,
//! and they decrease weakly as that slot moves down. A nonzero combination of
//! a block drops below the block value exactly when it lies in `K[t]` for the
//! first slot `t` past the block's value range, which is a subspace test.

use std::cmp::Ordering;
use std::fmt;

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::cut_analysis::{cut_profile, ConvexSubgroupDescriptor, CutProfile};
use crate::error::{OagError, Result};
use crate::linalg::{self, Row, Subspace};
use crate::oag_model::{combination, descend, filtration, Ambient, ArchClass, GroupElement, SpanHandle};
use crate::par;
use crate::rational::{primitive_integer, qi, Q};

/// Value of a point not in the span under one of the three valuations.
///
/// Level 1 keeps only `g`; level 2 adds whether the point is Archimedean
/// (ramified points sit below Archimedean ones of the same `g`); level 3 adds
/// the added class of ramified points, ordered as Archimedean classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct BlockKey {
    pub g: ConvexSubgroupDescriptor,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub archimedean: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<ArchClass>,
}

impl Ord for BlockKey {
    fn cmp(&self, o: &Self) -> Ordering {
        self.g.cmp(&o.g).then(self.archimedean.cmp(&o.archimedean)).then(self.delta.cmp(&o.delta))
    }
}

impl PartialOrd for BlockKey {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl fmt::Display for BlockKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.g)?;
        match self.archimedean {
            Some(true) => write!(f, ", arch")?,
            Some(false) => write!(f, ", ram")?,
            None => {}
        }
        if let Some(d) = self.delta {
            write!(f, ", delta {d}")?;
        }
        Ok(())
    }
}

impl BlockKey {
    pub fn from_profile(p: &CutProfile, level: u8) -> Option<BlockKey> {
        if p.member {
            return None;
        }
        Some(BlockKey {
            g: p.g,
            archimedean: (level >= 2).then_some(p.is_archimedean()),
            delta: if level >= 3 { p.delta() } else { None },
        })
    }

    /// Coarsen to a lower level.
    pub fn at_level(&self, level: u8) -> BlockKey {
        BlockKey {
            g: self.g,
            archimedean: if level >= 2 { self.archimedean } else { None },
            delta: if level >= 3 { self.delta } else { None },
        }
    }
}

fn check_level(level: u8) -> Result<()> {
    if !(1..=3).contains(&level) {
        return Err(OagError::config(format!("valuation level must be 1, 2 or 3, got {level}")));
    }
    Ok(())
}

/// Distance data of all combinations of a tuple from a span.
#[derive(Clone, Debug)]
pub struct Valuator {
    k: usize,
    n: usize,
    classes: Vec<bool>,
    filt: Vec<Subspace>,
}

impl Valuator {
    pub fn new(amb: &Ambient, cs: &[GroupElement], span: &SpanHandle) -> Valuator {
        let k = amb.nslots();
        Valuator { k, n: cs.len(), classes: (0..k).map(|s| span.has_class(s)).collect(), filt: filtration(amb, cs, span) }
    }

    pub fn nslots(&self) -> usize {
        self.k
    }

    /// Filtration step `s`; steps past the last are zero.
    pub fn step(&self, s: usize) -> Subspace {
        if s <= self.k {
            self.filt[s].clone()
        } else {
            Subspace::zero(self.n)
        }
    }

    pub fn has_class(&self, s: usize) -> bool {
        s < self.k && self.classes[s]
    }

    /// Distance slot of a combination; `k` means it lies in the span.
    pub fn distance(&self, l: &[Q]) -> usize {
        (0..=self.k).rev().find(|&s| self.filt[s].contains_vec(l)).unwrap_or(0)
    }

    pub fn key_at(&self, level: u8, m: usize) -> Option<BlockKey> {
        if m >= self.k {
            return None;
        }
        let arch = self.classes[m];
        let g = if arch {
            ConvexSubgroupDescriptor::type_below(m + 1)
        } else {
            let upper = (0..m).rev().find(|&s| self.classes[s]);
            ConvexSubgroupDescriptor::type_below(upper.map_or(0, |u| u + 1))
        };
        Some(BlockKey {
            g,
            archimedean: (level >= 2).then_some(arch),
            delta: (level >= 3 && !arch).then_some(ArchClass::Slot(m)),
        })
    }

    pub fn key(&self, level: u8, l: &[Q]) -> Option<BlockKey> {
        self.key_at(level, self.distance(l))
    }

    /// Whether the combination is Archimedean over the span (not a member, span has its class).
    pub fn is_archimedean(&self, l: &[Q]) -> bool {
        let m = self.distance(l);
        m < self.k && self.classes[m]
    }

    pub fn is_ramified(&self, l: &[Q]) -> bool {
        let m = self.distance(l);
        m < self.k && !self.classes[m]
    }

    /// A nonzero vector of `w` whose distance slot is not `s`.
    pub fn off_slot(&self, w: &Subspace, s: usize) -> Option<Row> {
        w.escape(&self.step(s)).or_else(|| w.intersect(&self.step(s + 1)).basis().first().cloned())
    }

    /// A nonzero vector of `w` whose distance slot satisfies `bad`.
    pub fn find_slot(&self, w: &Subspace, bad: impl Fn(usize) -> bool) -> Option<Row> {
        (0..=self.k).filter(|&s| bad(s)).find_map(|s| w.intersect(&self.step(s)).escape(&self.step(s + 1)))
    }

    /// A nonzero vector of `w` with key strictly below `key`, where every vector of `w` has key at most `key`.
    pub fn drop_below(&self, level: u8, w: &Subspace, key: Option<BlockKey>) -> Option<Row> {
        let key = key?;
        let last = (0..self.k).filter(|&m| self.key_at(level, m) == Some(key)).max()?;
        w.intersect(&self.step(last + 1)).basis().first().cloned()
    }
}

fn unit_span(idx: &[usize], n: usize) -> Subspace {
    Subspace::span(&idx.iter().map(|&i| linalg::unit_row(n, i)).collect::<Vec<_>>(), n)
}

fn normalized(v: &[Q]) -> Vec<Q> {
    primitive_integer(v).iter().map(qi).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Block {
    pub key: BlockKey,
    pub members: Vec<usize>,
}

/// Partition of a tuple by one valuation over a span, blocks in increasing value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockDecomposition {
    pub level: u8,
    pub blocks: Vec<Block>,
    /// Members lying in the span (the bottom value).
    pub in_span: Vec<usize>,
}

impl BlockDecomposition {
    pub fn key_of(&self, i: usize) -> Option<BlockKey> {
        self.blocks.iter().find(|b| b.members.contains(&i)).map(|b| b.key)
    }
}

pub fn group_by_key(keys: &[Option<BlockKey>], level: u8) -> BlockDecomposition {
    let mut blocks: Vec<Block> = Vec::new();
    let mut in_span = Vec::new();
    for (i, k) in keys.iter().enumerate() {
        match k {
            None => in_span.push(i),
            Some(k) => match blocks.iter_mut().find(|b| b.key == *k) {
                Some(b) => b.members.push(i),
                None => blocks.push(Block { key: *k, members: vec![i] }),
            },
        }
    }
    blocks.sort_by(|a, b| a.key.cmp(&b.key));
    BlockDecomposition { level, blocks, in_span }
}

pub fn val_blocks(amb: &Ambient, cs: &[GroupElement], span: &SpanHandle, level: u8) -> Result<BlockDecomposition> {
    check_level(level)?;
    let profiles = par::map(cs, |c| cut_profile(amb, c, span)).into_iter().collect::<Result<Vec<_>>>()?;
    let keys: Vec<Option<BlockKey>> = profiles.iter().map(|p| BlockKey::from_profile(p, level)).collect();
    Ok(group_by_key(&keys, level))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Separation {
    pub separated: bool,
    /// A member lying in the span.
    pub member_in_span: Option<usize>,
    /// Primitive integer combination whose value drops below the maximum over its support.
    #[serde(serialize_with = "crate::rational::ser_opt_vec")]
    pub combination: Option<Vec<Q>>,
}

pub fn is_separated(amb: &Ambient, cs: &[GroupElement], span: &SpanHandle, level: u8) -> Result<Separation> {
    check_level(level)?;
    let val = Valuator::new(amb, cs, span);
    let n = cs.len();
    let keys: Vec<Option<BlockKey>> = (0..n).map(|i| val.key(level, &linalg::unit_row(n, i))).collect();
    let dec = group_by_key(&keys, level);
    if let Some(&i) = dec.in_span.first() {
        return Ok(Separation { separated: false, member_in_span: Some(i), combination: None });
    }
    let drops = par::map(&dec.blocks, |b| val.drop_below(level, &unit_span(&b.members, n), Some(b.key)));
    match drops.into_iter().flatten().next() {
        Some(v) => Ok(Separation { separated: false, member_in_span: None, combination: Some(normalized(&v)) }),
        None => Ok(Separation { separated: true, member_in_span: None, combination: None }),
    }
}

/// A half-line in one slot's coordinates, scaled so its first nonzero entry is 1 or -1.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct RayClass {
    pub slot: ArchClass,
    #[serde(serialize_with = "crate::rational::ser_vec")]
    pub direction: Vec<Q>,
}

impl RayClass {
    pub fn new(slot: ArchClass, coords: &[Q]) -> Result<RayClass> {
        let first = coords.iter().find(|x| !x.is_zero()).ok_or_else(|| OagError::internal("zero ray"))?;
        let s = first.abs();
        Ok(RayClass { slot, direction: coords.iter().map(|x| x / &s).collect() })
    }
}

/// Rays of `c_i - b_i` at the common added class, `b_i` the ramifiers over the span.
pub fn pplus_rays(amb: &Ambient, block: &[GroupElement], span: &SpanHandle) -> Result<Vec<RayClass>> {
    let mut out = Vec::new();
    let mut slot = None;
    for (i, c) in block.iter().enumerate() {
        let p = cut_profile(amb, c, span)?;
        let Some(r) = &p.ramifier else {
            return Err(OagError::config(format!("block member {i} is not ramified over the span")));
        };
        let s = r.delta.slot().unwrap();
        if *slot.get_or_insert(s) != s {
            return Err(OagError::config("block members add different classes"));
        }
        out.push(RayClass::new(r.delta, amb.slot_coords(&c.sub(&r.a), s))?);
    }
    Ok(out)
}

/// A rational relation among ray directions, when they are not free.
pub fn ray_relation(rays: &[RayClass]) -> Option<Vec<Q>> {
    let n = rays.first()?.direction.len();
    let vecs: Vec<Row> = rays.iter().map(|r| r.direction.clone()).collect();
    linalg::relations(&vecs, n).first().map(|v| normalized(v))
}

/// Position of a normal-form basis element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalKind {
    /// Archimedean over the larger span.
    BArchimedean,
    /// Archimedean over the smaller span and ramified over the larger.
    BRamified,
    /// Ramified over the smaller span.
    ARamified,
}

/// Enumeration index: `g` is the group over the larger span; `delta` is the
/// class added over the larger span (`BRamified`) or over the smaller (`ARamified`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct NormalIndex {
    pub kind: NormalKind,
    pub g: ConvexSubgroupDescriptor,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<ArchClass>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Descent,
    Separate,
    Split,
    Refine,
}

/// One replacement step; `before` and `measure` are the loop's measure ahead of
/// and after the step, as counts per class interval, highest first.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceStep {
    pub phase: Phase,
    pub replaced: usize,
    #[serde(serialize_with = "crate::rational::ser_vec")]
    pub with: Vec<Q>,
    pub before: Vec<usize>,
    pub measure: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormalFormBasis {
    pub elements: Vec<GroupElement>,
    pub index: Vec<NormalIndex>,
    /// Row `i` holds the coefficients of element `i` over the input tuple.
    pub matrix: Vec<Row>,
    /// Element `i` is `matrix[i] . c + translation[i]`, with the translation in the smaller span.
    pub translation: Vec<GroupElement>,
    pub trace: Vec<TraceStep>,
    pub diagnostics: Vec<String>,
}

impl NormalFormBasis {
    pub fn apply(&self, amb: &Ambient, cs: &[GroupElement]) -> Vec<GroupElement> {
        self.matrix.iter().zip(&self.translation).map(|(row, t)| combination(row, cs, amb.dim()).add(t)).collect()
    }

    /// Recover the input tuple from the basis by inverting the transform.
    pub fn recover(&self, amb: &Ambient) -> Result<Vec<GroupElement>> {
        let n = self.matrix.len();
        let inv = invert(&self.matrix).ok_or_else(|| OagError::internal("normal-form transform is singular"))?;
        let shifted: Vec<GroupElement> = self.elements.iter().zip(&self.translation).map(|(e, t)| e.sub(t)).collect();
        Ok((0..n).map(|i| combination(&inv[i], &shifted, amb.dim())).collect())
    }
}

pub fn invert(m: &[Row]) -> Option<Vec<Row>> {
    let n = m.len();
    let mut a: Vec<Row> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend(linalg::unit_row(n, i));
            row
        })
        .collect();
    for col in 0..n {
        let p = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, p);
        let inv = Q::from_integer(1.into()) / &a[col][col];
        a[col] = linalg::scaled(&a[col], &inv);
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = -a[r][col].clone();
                let pivot = a[col].clone();
                linalg::axpy(&mut a[r], &f, &pivot);
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

const MAX_STEPS: usize = 10_000;

struct Pipeline<'a> {
    n: usize,
    va: Valuator,
    vb: Valuator,
    cs: &'a [GroupElement],
    trace: Vec<TraceStep>,
    diagnostics: Vec<String>,
}

impl Pipeline<'_> {
    /// Class of the element's residue over the smaller span, as a distance slot.
    fn delta_a(&self, l: &[Q]) -> usize {
        self.va.distance(l)
    }

    /// Support term of `e` (coordinates over `terms`) with the largest class, lowest index on ties.
    fn pick_term(&self, terms: &[Row], coords: &[Q], among: &[usize]) -> usize {
        *among.iter().filter(|&&i| !coords[i].is_zero()).min_by_key(|&&i| (self.delta_a(&terms[i]), i)).expect("nonzero combination")
    }

    /// Counts per class interval, highest interval first, for the given classes and cut points.
    fn measure(points: &[usize], cuts: &[usize]) -> Vec<usize> {
        // cuts are distance slots in decreasing order (increasing class); interval index counts cuts at or below the class
        let n = cuts.len();
        let mut f = vec![0; n + 1];
        for &m in points {
            let idx = cuts.iter().filter(|&&c| c >= m).count();
            f[idx] += 1;
        }
        f.reverse();
        f
    }

    fn new_classes(v: &Valuator) -> Vec<usize> {
        let mut out: Vec<usize> =
            (0..v.k).filter(|&s| !v.classes[s] && v.filt[s].escape(&v.filt[s + 1]).is_some()).collect();
        out.sort_unstable_by(|a, b| b.cmp(a));
        out
    }

    fn lift(&mut self) -> (Vec<Row>, Vec<usize>) {
        let n = self.n;
        let mut lifted: Vec<Row> = Vec::new();
        let mut lifted_class = Vec::new();
        for m in 0..self.va.k {
            if self.va.classes[m] {
                continue;
            }
            let top = &self.va.filt[m];
            let mut cands: Vec<Row> = (0..n).map(|i| linalg::unit_row(n, i)).collect();
            cands.extend(top.basis().iter().cloned());
            let mut chosen: Vec<Row> = self.va.filt[m + 1].basis().to_vec();
            for c in cands {
                if top.contains_vec(&c) && !Subspace::span(&chosen, n).contains_vec(&c) {
                    chosen.push(c.clone());
                    lifted.push(c);
                    lifted_class.push(m);
                }
            }
        }
        (lifted, lifted_class)
    }

    fn complement(&self, lifted: &[Row]) -> Vec<Row> {
        let n = self.n;
        let mut have = lifted.to_vec();
        let mut out = Vec::new();
        for i in 0..n {
            let e = linalg::unit_row(n, i);
            if !Subspace::span(&have, n).contains_vec(&e) {
                have.push(e.clone());
                out.push(e);
            }
        }
        out
    }

    /// Add multiples of the lifted vectors until the combination is Archimedean over the smaller span.
    fn make_archimedean(&self, mut x: Row, lifted: &[Row], lifted_class: &[usize]) -> Result<Row> {
        for _ in 0..=self.va.k {
            let m = self.va.distance(&x);
            if m >= self.va.k || self.va.classes[m] {
                return Ok(x);
            }
            let us: Vec<&Row> = lifted.iter().zip(lifted_class).filter(|(_, &d)| d == m).map(|(u, _)| u).collect();
            let below = self.va.step(m + 1);
            let mut cols: Vec<Row> = us.iter().map(|u| (*u).clone()).collect();
            cols.extend(below.basis().iter().cloned());
            cols.push(x.clone());
            let rel = linalg::relations(&cols, self.n)
                .into_iter()
                .find(|r| !r.last().unwrap().is_zero())
                .ok_or_else(|| OagError::internal("lifted classes do not cover a ramified combination"))?;
            let last = rel.last().unwrap().clone();
            // x = -(sum rel_j cols_j) / last; drop the lifted part
            let mut y = x.clone();
            for (j, u) in us.iter().enumerate() {
                linalg::axpy(&mut y, &(&rel[j] / &last), u);
            }
            x = y;
        }
        Err(OagError::internal("descent through lifted classes did not terminate"))
    }

    fn descent(&mut self, v: &mut [Row], lifted: &[Row], lifted_class: &[usize]) -> Result<()> {
        let cuts = Self::new_classes(&self.va);
        let mut last = Self::measure(&v.iter().map(|x| self.delta_a(x)).collect::<Vec<_>>(), &cuts);
        for _ in 0..MAX_STEPS {
            let w = Subspace::span(v, self.n);
            let Some(e) = self.va.find_slot(&w, |s| s < self.va.k && !self.va.classes[s]) else { return Ok(()) };
            let coords = coords_in(v, &e).ok_or_else(|| OagError::internal("combination outside its span"))?;
            let all: Vec<usize> = (0..v.len()).collect();
            let i = self.pick_term(v, &coords, &all);
            let x = self.make_archimedean(e, lifted, lifted_class)?;
            v[i] = x.clone();
            let now = Self::measure(&v.iter().map(|x| self.delta_a(x)).collect::<Vec<_>>(), &cuts);
            if now >= last {
                return Err(OagError::internal("descent measure failed to decrease"));
            }
            let before = std::mem::replace(&mut last, now.clone());
            self.trace.push(TraceStep { phase: Phase::Descent, replaced: i, with: x, before, measure: now });
        }
        Err(OagError::internal("descent loop exceeded its step bound"))
    }

    fn separate(&mut self, v: &mut [Row]) -> Result<()> {
        for _ in 0..MAX_STEPS {
            let keys: Vec<Option<BlockKey>> = v.iter().map(|x| self.va.key(1, x)).collect();
            let dec = group_by_key(&keys, 1);
            let found = dec.blocks.iter().rev().find_map(|b| {
                let w = Subspace::span(&b.members.iter().map(|&i| v[i].clone()).collect::<Vec<_>>(), self.n);
                self.va.drop_below(1, &w, Some(b.key)).map(|e| (b.members.clone(), e))
            });
            let Some((members, e)) = found else { return Ok(()) };
            let coords = coords_in(v, &e).ok_or_else(|| OagError::internal("combination outside its span"))?;
            let i = self.pick_term(v, &coords, &members);
            v[i] = e.clone();
            let left = members.len() - 1;
            self.trace.push(TraceStep { phase: Phase::Separate, replaced: i, with: e, before: vec![members.len()], measure: vec![left] });
        }
        Err(OagError::internal("separation loop exceeded its step bound"))
    }

    fn split(&mut self, v: &mut [Row]) -> Result<()> {
        for _ in 0..MAX_STEPS {
            let plain: Vec<usize> = (0..v.len()).filter(|&i| self.vb.is_archimedean(&v[i])).collect();
            let keys: Vec<Option<BlockKey>> = plain.iter().map(|&i| self.vb.key(1, &v[i])).collect();
            let dec = group_by_key(&keys, 1);
            let found = dec.blocks.iter().find_map(|b| {
                let members: Vec<usize> = b.members.iter().map(|&j| plain[j]).collect();
                let w = Subspace::span(&members.iter().map(|&i| v[i].clone()).collect::<Vec<_>>(), self.n);
                self.vb.find_slot(&w, |s| s >= self.vb.k || !self.vb.classes[s]).map(|e| (members, e))
            });
            let Some((members, e)) = found else { return Ok(()) };
            let coords = coords_in(v, &e).ok_or_else(|| OagError::internal("combination outside its span"))?;
            let i = self.pick_term(v, &coords, &members);
            let before = vec![plain.len()];
            v[i] = e.clone();
            let remaining = (0..v.len()).filter(|&j| self.vb.is_archimedean(&v[j])).count();
            self.trace.push(TraceStep { phase: Phase::Split, replaced: i, with: e, before, measure: vec![remaining] });
        }
        Err(OagError::internal("split loop exceeded its step bound"))
    }

    fn refine(&mut self, v: &mut [Row], lifted: &[Row]) -> Result<()> {
        let cuts = Self::new_classes(&self.vb);
        let mixed_classes = |v: &[Row]| -> Vec<usize> {
            v.iter().filter(|x| self.vb.is_ramified(x) && self.va.is_archimedean(x)).map(|x| self.vb.distance(x)).collect()
        };
        let mut last = Self::measure(&mixed_classes(v), &cuts);
        for _ in 0..MAX_STEPS {
            let Some((members, e)) = self.refine_violation(v, lifted) else { return Ok(()) };
            let coords = coords_in_pair(v, lifted, &e).ok_or_else(|| OagError::internal("combination outside its span"))?;
            let mixed: Vec<usize> = members.into_iter().filter(|&i| !coords[i].is_zero()).collect();
            if mixed.is_empty() {
                self.diagnostics.push("a combination of lifted points alone leaves its class over the larger span".into());
                return Ok(());
            }
            let m = self.vb.distance(&e);
            if m >= self.vb.k || self.vb.classes[m] {
                self.diagnostics.push("a refining combination is not ramified over the larger span".into());
                return Ok(());
            }
            let i = self.pick_term(v, &coords, &mixed);
            v[i] = e.clone();
            let now = Self::measure(&mixed_classes(v), &cuts);
            if now >= last {
                return Err(OagError::internal("refinement measure failed to decrease"));
            }
            let before = std::mem::replace(&mut last, now.clone());
            self.trace.push(TraceStep { phase: Phase::Refine, replaced: i, with: e, before, measure: now });
        }
        Err(OagError::internal("refinement loop exceeded its step bound"))
    }

    /// A block of mixed points (ramified over the larger span, Archimedean over the smaller) and lifted points (same group and class over the larger span) with a combination leaving the class.
    fn refine_violation(&self, v: &[Row], lifted: &[Row]) -> Option<(Vec<usize>, Row)> {
        let mixed: Vec<usize> = (0..v.len()).filter(|&i| self.vb.is_ramified(&v[i]) && self.va.is_archimedean(&v[i])).collect();
        let mut groups: Vec<(Option<BlockKey>, Vec<usize>)> = Vec::new();
        for &i in &mixed {
            let key = self.vb.key(3, &v[i]);
            match groups.iter_mut().find(|(k, _)| *k == key) {
                Some((_, g)) => g.push(i),
                None => groups.push((key, vec![i])),
            }
        }
        for (key, members) in groups {
            let delta = key?.delta?.slot()?;
            let mut vecs: Vec<Row> = members.iter().map(|&i| v[i].clone()).collect();
            for t in lifted {
                if self.vb.key(1, t).map(|k| k.g) == key.map(|k| k.g) && self.va.distance(t) == delta {
                    vecs.push(t.clone());
                }
            }
            let w = Subspace::span(&vecs, self.n);
            if let Some(e) = self.vb.off_slot(&w, delta) {
                return Some((members, e));
            }
        }
        None
    }

    fn index_of(&self, l: &[Q]) -> NormalIndex {
        let gb = self.vb.key(1, l).map_or(ConvexSubgroupDescriptor::type_below(self.vb.k), |k| k.g);
        if self.va.is_ramified(l) {
            NormalIndex { kind: NormalKind::ARamified, g: gb, delta: Some(ArchClass::Slot(self.va.distance(l))) }
        } else if self.vb.is_ramified(l) {
            NormalIndex { kind: NormalKind::BRamified, g: gb, delta: Some(ArchClass::Slot(self.vb.distance(l))) }
        } else {
            NormalIndex { kind: NormalKind::BArchimedean, g: gb, delta: None }
        }
    }
}

/// Coordinates of `x` over independent vectors.
fn coords_in(vs: &[Row], x: &[Q]) -> Option<Row> {
    let n = x.len();
    let mut cols = vs.to_vec();
    cols.push(x.to_vec());
    let rel = linalg::relations(&cols, n).into_iter().find(|r| !r.last().unwrap().is_zero())?;
    let last = rel.last().unwrap().clone();
    Some(rel[..vs.len()].iter().map(|c| -c / &last).collect())
}

fn coords_in_pair(v: &[Row], t: &[Row], x: &[Q]) -> Option<Row> {
    let mut all = v.to_vec();
    all.extend_from_slice(t);
    coords_in(&all, x)
}

/// Rebase a tuple onto a basis of its span over `a` satisfying the five normal-form properties.
pub fn normalize(amb: &Ambient, cs: &[GroupElement], a: &SpanHandle, b: &SpanHandle) -> Result<NormalFormBasis> {
    if !b.contains_span(a) {
        return Err(OagError::config("the smaller parameter span must be contained in the larger"));
    }
    let n = cs.len();
    let va = Valuator::new(amb, cs, a);
    if let Some(rel) = va.step(amb.nslots()).basis().first() {
        return Err(OagError::config(format!(
            "the tuple is not free over the smaller span; relation {:?}",
            normalized(rel).iter().map(|x| x.to_string()).collect::<Vec<_>>()
        )));
    }
    let vb = Valuator::new(amb, cs, b);
    let mut p = Pipeline { n, va, vb, cs, trace: Vec::new(), diagnostics: Vec::new() };
    if !p.vb.step(amb.nslots()).is_zero() {
        p.diagnostics.push("some combination of the tuple lies in the larger span".into());
    }
    let (lifted, lifted_class) = p.lift();
    let mut v = p.complement(&lifted);
    p.descent(&mut v, &lifted, &lifted_class)?;
    p.separate(&mut v)?;
    p.split(&mut v)?;
    p.refine(&mut v, &lifted)?;

    let mut rows: Vec<(NormalIndex, usize, Row)> = v.into_iter().chain(lifted).enumerate().map(|(i, r)| (p.index_of(&r), i, r)).collect();
    rows.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    let mut elements = Vec::new();
    let mut translation = Vec::new();
    for (_, _, r) in &rows {
        let x = combination(r, p.cs, amb.dim());
        let d = descend(amb, &x, a);
        translation.push(d.approx.neg());
        elements.push(d.residue);
    }
    let basis = NormalFormBasis {
        elements,
        index: rows.iter().map(|r| r.0).collect(),
        matrix: rows.into_iter().map(|r| r.2).collect(),
        translation,
        trace: p.trace,
        diagnostics: p.diagnostics,
    };
    let mut basis = basis;
    let report = check_normal_form(amb, &basis.elements, &basis.index, a, b)?;
    for (name, c) in report.properties() {
        if !c.holds {
            basis.diagnostics.push(format!("property {name} does not hold on the output"));
        }
    }
    Ok(basis)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyCheck {
    pub holds: bool,
    /// Coefficients over the basis of a violating combination.
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "crate::rational::ser_opt_vec")]
    pub counterexample: Option<Vec<Q>>,
}

impl PropertyCheck {
    fn from(v: Option<Row>) -> PropertyCheck {
        PropertyCheck { holds: v.is_none(), counterexample: v.map(|x| normalized(&x)) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormalFormReport {
    /// The recorded indices match the cut profiles of the elements.
    pub enumeration: PropertyCheck,
    /// No nonzero combination lies in the larger span.
    pub free_over_larger: PropertyCheck,
    /// Groups ramified over the smaller span with one class stay at that class.
    pub a_ramified_separated: PropertyCheck,
    /// Combinations of the other elements are Archimedean over the smaller span.
    pub a_archimedean: PropertyCheck,
    /// Groups of one upper group keep that group under the first valuation over the smaller span.
    pub value_kept: PropertyCheck,
    /// Groups Archimedean over the larger span stay Archimedean over it.
    pub b_archimedean: PropertyCheck,
    /// Groups ramified over the larger span, with the matching groups ramified over the smaller one, keep their added class.
    pub b_ramified_refined: PropertyCheck,
}

impl NormalFormReport {
    pub fn properties(&self) -> [(&'static str, &PropertyCheck); 7] {
        [
            ("enumeration", &self.enumeration),
            ("free", &self.free_over_larger),
            ("a_ramified_separated", &self.a_ramified_separated),
            ("a_archimedean", &self.a_archimedean),
            ("value_kept", &self.value_kept),
            ("b_archimedean", &self.b_archimedean),
            ("b_ramified_refined", &self.b_ramified_refined),
        ]
    }

    pub fn all_hold(&self) -> bool {
        self.properties().iter().all(|(_, c)| c.holds)
    }
}

fn groups<K: PartialEq + Copy>(index: &[NormalIndex], pick: impl Fn(&NormalIndex) -> Option<K>) -> Vec<(K, Vec<usize>)> {
    let mut out: Vec<(K, Vec<usize>)> = Vec::new();
    for (i, x) in index.iter().enumerate() {
        if let Some(k) = pick(x) {
            match out.iter_mut().find(|(kk, _)| *kk == k) {
                Some((_, g)) => g.push(i),
                None => out.push((k, vec![i])),
            }
        }
    }
    out
}

/// Enumeration index of one element from its cut profiles over both spans.
pub fn normal_index(amb: &Ambient, e: &GroupElement, a: &SpanHandle, b: &SpanHandle) -> Result<NormalIndex> {
    let pa = cut_profile(amb, e, a)?;
    let pb = cut_profile(amb, e, b)?;
    Ok(if pa.is_ramified() {
        NormalIndex { kind: NormalKind::ARamified, g: pb.g, delta: pa.delta() }
    } else if pb.is_ramified() {
        NormalIndex { kind: NormalKind::BRamified, g: pb.g, delta: pb.delta() }
    } else {
        NormalIndex { kind: NormalKind::BArchimedean, g: pb.g, delta: None }
    })
}

/// Decide the five normal-form properties of an enumerated basis.
pub fn check_normal_form(amb: &Ambient, elems: &[GroupElement], index: &[NormalIndex], a: &SpanHandle, b: &SpanHandle) -> Result<NormalFormReport> {
    if elems.len() != index.len() {
        return Err(OagError::config("basis and index lengths differ"));
    }
    let n = elems.len();
    let k = amb.nslots();
    let va = Valuator::new(amb, elems, a);
    let vb = Valuator::new(amb, elems, b);

    let mut bad_index = None;
    for (i, e) in elems.iter().enumerate() {
        if a.contains(e) || normal_index(amb, e, a, b)? != index[i] {
            bad_index = Some(linalg::unit_row(n, i));
            break;
        }
    }

    let free = vb.step(k).basis().first().cloned();

    let lifted = groups(index, |x| (x.kind == NormalKind::ARamified).then_some((x.g, x.delta)));
    let a_ramified_separated = lifted.iter().find_map(|((_, d), m)| {
        let s = d.and_then(|d| d.slot()).unwrap_or(k);
        va.off_slot(&unit_span(m, n), s)
    });

    let others: Vec<usize> = (0..n).filter(|&i| index[i].kind != NormalKind::ARamified).collect();
    let a_archimedean = va.find_slot(&unit_span(&others, n), |s| s >= k || !va.has_class(s));

    let by_g = groups(index, |x| (x.kind != NormalKind::ARamified).then_some(x.g));
    let value_kept = by_g.iter().find_map(|(g, m)| {
        let w = unit_span(m, n);
        va.find_slot(&w, |s| va.key_at(1, s).map(|key| key.g) != Some(*g))
    });

    let plain = groups(index, |x| (x.kind == NormalKind::BArchimedean).then_some(x.g));
    let b_archimedean = plain.iter().find_map(|(_, m)| vb.find_slot(&unit_span(m, n), |s| s >= k || !vb.has_class(s)));

    let mixed = groups(index, |x| (x.kind == NormalKind::BRamified).then_some((x.g, x.delta)));
    let b_ramified_refined = mixed.iter().find_map(|((g, d), m)| {
        let mut members = m.clone();
        members.extend((0..n).filter(|&i| index[i].kind == NormalKind::ARamified && index[i].g == *g && index[i].delta == *d));
        let s = d.and_then(|d| d.slot()).unwrap_or(k);
        let w = unit_span(&members, n);
        if vb.has_class(s) {
            return w.basis().first().cloned();
        }
        vb.off_slot(&w, s)
    });

    Ok(NormalFormReport {
        enumeration: PropertyCheck::from(bad_index),
        free_over_larger: PropertyCheck::from(free),
        a_ramified_separated: PropertyCheck::from(a_ramified_separated),
        a_archimedean: PropertyCheck::from(a_archimedean),
        value_kept: PropertyCheck::from(value_kept),
        b_archimedean: PropertyCheck::from(b_archimedean),
        b_ramified_refined: PropertyCheck::from(b_ramified_refined),
    })
}
