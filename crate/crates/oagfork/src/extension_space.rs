//! Global invariant extensions of the type of a tuple over `B`, described
//! symbolically.
//!
//! A block of points ramified over `B` with a common bracketing group splits
//! into sub-blocks by added class. Each sub-block has an inner extension (its
//! cut collapses towards the lower group), an outer one (towards the upper
//! group), or both. Which of the two exist is decided by comparing the groups
//! over `B` with those over `A`: on a cut-independent block the groups over
//! `B` are invariant over `A` exactly when they coincide with the groups over
//! `A`. A strong extension of the whole block takes the inner extension on an
//! initial run of sub-blocks and the outer one on the rest.

use serde::Serialize;

use crate::block_theory::{is_separated, normalize, val_blocks, BlockKey, NormalFormBasis};
use crate::congruence::PrimeKind;
use crate::cut_analysis::{cut_profile, tuple_cut_independence, ConvexSubgroupDescriptor, CutProfile};
use crate::error::{OagError, Result};
use crate::oag_model::{Ambient, ArchClass, GroupElement, ModelKind, SpanHandle};
use crate::par;
use crate::scene::Scene;
use crate::verdict::{decide_forking, Verdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    Arch,
    Ram,
}

/// Direction in which an extension moves the cut of a ramified sub-block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtensionSide {
    Inner,
    Outer,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Availability {
    InnerOnly,
    OuterOnly,
    InnerAndOuter,
}

impl Availability {
    pub fn count(self) -> usize {
        match self {
            Availability::InnerAndOuter => 2,
            _ => 1,
        }
    }

    pub fn allows(self, side: ExtensionSide) -> bool {
        !matches!(
            (self, side),
            (Availability::InnerOnly, ExtensionSide::Outer) | (Availability::OuterOnly, ExtensionSide::Inner)
        )
    }
}

/// Which of the three segmentation rules applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentRule {
    /// The lower group over `B` is not invariant over `A`: everything is outer.
    LowerGroupMoved,
    /// The upper group over `B` is not invariant over `A`: everything is inner.
    UpperGroupMoved,
    /// Both groups are invariant: outer from the first sub-block with a point Archimedean over `A`.
    BothInvariant,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubBlock {
    /// Positions in the classified block.
    pub members: Vec<usize>,
    pub delta: ArchClass,
    /// Members that are Archimedean over `A`.
    pub archimedean_over_a: Vec<usize>,
    pub available: Availability,
    pub invariant_extension_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockClassification {
    pub kind: BlockKind,
    pub size: usize,
    /// Upper and lower bracketing groups over `B`.
    pub g: ConvexSubgroupDescriptor,
    pub h: Option<ConvexSubgroupDescriptor>,
    pub h_matches: bool,
    pub g_matches: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<SegmentRule>,
    /// Sub-blocks in increasing added class.
    pub sub_blocks: Vec<SubBlock>,
    /// Positions in `sub_blocks`.
    pub inner: Vec<usize>,
    pub outer: Vec<usize>,
    pub free: Vec<usize>,
    pub strong_extension_count: usize,
    /// Dimension of the space of rationally free parameter types (Archimedean blocks).
    pub arch_parameters: usize,
}

fn profiles(amb: &Ambient, block: &[GroupElement], span: &SpanHandle) -> Result<Vec<CutProfile>> {
    par::map(block, |c| cut_profile(amb, c, span)).into_iter().collect()
}

/// Classify a block of one value under the second valuation over `B`.
///
/// The block must be separated under the third valuation over `B` and
/// cut-independent from `B` over `A`.
pub fn classify_block(amb: &Ambient, block: &[GroupElement], a: &SpanHandle, b: &SpanHandle) -> Result<BlockClassification> {
    if block.is_empty() {
        return Err(OagError::config("cannot classify an empty block"));
    }
    let over_b = profiles(amb, block, b)?;
    let over_a = profiles(amb, block, a)?;
    let key = BlockKey::from_profile(&over_b[0], 2).ok_or_else(|| OagError::config("block member 0 lies in B"))?;
    for (i, p) in over_b.iter().enumerate() {
        if BlockKey::from_profile(p, 2) != Some(key) {
            return Err(OagError::config(format!("member {i} has a different value than member 0 under the second valuation")));
        }
    }
    let sep = is_separated(amb, block, b, 3)?;
    if !sep.separated {
        return Err(OagError::config("block is not separated under the third valuation over B"));
    }
    if !tuple_cut_independence(amb, a, b, block)?.independent {
        return Err(OagError::config("block is not cut-independent from B over A"));
    }
    let n = block.len();
    if key.archimedean == Some(true) {
        return Ok(BlockClassification {
            kind: BlockKind::Arch,
            size: n,
            g: key.g,
            h: None,
            h_matches: true,
            g_matches: over_a.iter().all(|p| p.g == key.g),
            rule: None,
            sub_blocks: Vec::new(),
            inner: Vec::new(),
            outer: Vec::new(),
            free: Vec::new(),
            strong_extension_count: 1,
            arch_parameters: n,
        });
    }
    let h = over_b[0].h;
    let h_matches = over_a.iter().filter(|p| p.is_ramified()).all(|p| p.h == h);
    let g_matches = over_a.iter().all(|p| p.g == key.g);
    let mut deltas: Vec<ArchClass> = over_b.iter().map(|p| p.delta().unwrap()).collect();
    deltas.sort();
    deltas.dedup();
    let sub_blocks: Vec<SubBlock> = deltas
        .iter()
        .map(|&d| {
            let members: Vec<usize> = (0..n).filter(|&i| over_b[i].delta() == Some(d)).collect();
            let arch: Vec<usize> = members.iter().copied().filter(|&i| over_a[i].is_archimedean()).collect();
            let available = if !arch.is_empty() {
                Availability::OuterOnly
            } else {
                match (h_matches, g_matches) {
                    (true, true) => Availability::InnerAndOuter,
                    (true, false) => Availability::InnerOnly,
                    _ => Availability::OuterOnly,
                }
            };
            SubBlock { members, delta: d, archimedean_over_a: arch, available, invariant_extension_count: available.count() }
        })
        .collect();
    let e = sub_blocks.len();
    let (rule, first_outer, first_free) = if !h_matches {
        if !g_matches {
            return Err(OagError::config("neither bracketing group is invariant over A: the block is not cut-independent"));
        }
        (SegmentRule::LowerGroupMoved, 0, 0)
    } else if !g_matches {
        (SegmentRule::UpperGroupMoved, e, e)
    } else {
        let o = sub_blocks.iter().position(|s| !s.archimedean_over_a.is_empty()).unwrap_or(e);
        (SegmentRule::BothInvariant, o, 0)
    };
    let inner: Vec<usize> = (0..first_free).collect();
    let free: Vec<usize> = (first_free..first_outer).collect();
    let outer: Vec<usize> = (first_outer..e).collect();
    let cls = BlockClassification {
        kind: BlockKind::Ram,
        size: n,
        g: key.g,
        h: Some(h),
        h_matches,
        g_matches,
        rule: Some(rule),
        sub_blocks,
        inner,
        strong_extension_count: free.len() + 1,
        outer,
        free,
        arch_parameters: 0,
    };
    check_segments(&cls)?;
    Ok(cls)
}

fn check_segments(cls: &BlockClassification) -> Result<()> {
    for &i in &cls.inner {
        if !cls.sub_blocks[i].available.allows(ExtensionSide::Inner) {
            return Err(OagError::internal(format!("sub-block {i} is placed inner but has no inner extension")));
        }
    }
    for &i in &cls.outer {
        if !cls.sub_blocks[i].available.allows(ExtensionSide::Outer) {
            return Err(OagError::internal(format!("sub-block {i} is placed outer but has no outer extension")));
        }
    }
    for &i in &cls.free {
        if cls.sub_blocks[i].available != Availability::InnerAndOuter {
            return Err(OagError::internal(format!("sub-block {i} is free but lacks one of its extensions")));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GluingStep {
    /// Position in the classification's sub-blocks; 0 for an Archimedean block.
    pub sub_block: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<ArchClass>,
    pub side: ExtensionSide,
}

/// Order in which the sub-block extensions are combined into one extension of the block.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GluingPlan {
    pub steps: Vec<GluingStep>,
}

impl GluingPlan {
    /// Inner steps come first in increasing class, then outer steps in
    /// decreasing class, and every inner sub-block has a smaller added class
    /// than every outer one.
    pub fn validate(&self) -> Result<()> {
        let mut seen_outer = false;
        let mut last: Option<ArchClass> = None;
        let mut max_inner: Option<ArchClass> = None;
        for s in &self.steps {
            match s.side {
                ExtensionSide::Inner => {
                    if seen_outer {
                        return Err(OagError::config("an inner step follows an outer step"));
                    }
                    if let (Some(p), Some(d)) = (last, s.delta) {
                        if d <= p {
                            return Err(OagError::config("inner steps must have increasing classes"));
                        }
                    }
                    max_inner = s.delta.or(max_inner);
                }
                ExtensionSide::Outer => {
                    if seen_outer {
                        if let (Some(p), Some(d)) = (last, s.delta) {
                            if d >= p {
                                return Err(OagError::config("outer steps must have decreasing classes"));
                            }
                        }
                    }
                    if let (Some(mi), Some(d)) = (max_inner, s.delta) {
                        if d <= mi {
                            return Err(OagError::config("an inner sub-block has a class above an outer one"));
                        }
                    }
                    seen_outer = true;
                }
            }
            last = s.delta;
        }
        Ok(())
    }
}

/// The strong extension taking the inner extension on the first `inner_free`
/// free sub-blocks and the outer one on the remaining free sub-blocks.
pub fn gluing_plan(cls: &BlockClassification, inner_free: usize) -> Result<GluingPlan> {
    if cls.kind == BlockKind::Arch {
        return Ok(GluingPlan { steps: vec![GluingStep { sub_block: 0, delta: None, side: ExtensionSide::Outer }] });
    }
    if inner_free > cls.free.len() {
        return Err(OagError::config(format!("only {} free sub-blocks, asked for {inner_free} inner", cls.free.len())));
    }
    let mut inner: Vec<usize> = cls.inner.clone();
    inner.extend(&cls.free[..inner_free]);
    let mut outer: Vec<usize> = cls.free[inner_free..].to_vec();
    outer.extend(&cls.outer);
    outer.reverse();
    let step = |i: usize, side| GluingStep { sub_block: i, delta: Some(cls.sub_blocks[i].delta), side };
    let steps = inner.into_iter().map(|i| step(i, ExtensionSide::Inner)).chain(outer.into_iter().map(|i| step(i, ExtensionSide::Outer))).collect();
    let plan = GluingPlan { steps };
    plan.validate()?;
    Ok(plan)
}

/// All strong extensions of the block, one per initial run of free sub-blocks.
pub fn strong_extensions(cls: &BlockClassification) -> Result<Vec<GluingPlan>> {
    if cls.kind == BlockKind::Arch {
        return Ok(vec![gluing_plan(cls, 0)?]);
    }
    (0..=cls.free.len()).map(|k| gluing_plan(cls, k)).collect()
}

fn common_key(amb: &Ambient, block: &[GroupElement], d: &SpanHandle) -> Result<Option<BlockKey>> {
    let dec = val_blocks(amb, block, d, 2)?;
    if dec.blocks.len() + usize::from(!dec.in_span.is_empty()) > 1 {
        return Err(OagError::config("members of a block must share their value under the second valuation"));
    }
    Ok(dec.blocks.first().map(|b| b.key))
}

/// Blocks carrying distinct values under the second valuation over `d` have
/// weakly orthogonal types over `d`.
pub fn weakly_orthogonal(amb: &Ambient, block_i: &[GroupElement], block_j: &[GroupElement], d: &SpanHandle) -> Result<bool> {
    Ok(common_key(amb, block_i, d)? != common_key(amb, block_j, d)?)
}

/// One summand of a coproduct: the extensions of the Archimedean part over
/// one fixed extension of the ramified part.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summand {
    /// Side chosen on each ramified sub-block, in increasing class.
    pub labels: Vec<ExtensionSide>,
    /// Free parameters: the number of Archimedean points.
    pub parameters: usize,
    /// Dimension of the type space containing the summand (0 for a point).
    pub ambient_dim: usize,
}

/// Factor for one block of the first valuation over `B`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Val1Factor {
    pub key: BlockKey,
    /// Positions in the normalized basis.
    pub members: Vec<usize>,
    pub archimedean: Vec<usize>,
    pub ramified: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<BlockClassification>,
    pub coproduct: Vec<Summand>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum PrimeShape {
    /// A single extension.
    Point,
    /// A closed subspace of the `l`-adic integers to the given power.
    LadicSubspace { dim: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PrimeFactor {
    pub l: u64,
    pub kind: PrimeKind,
    #[serde(flatten)]
    pub shape: PrimeShape,
}

/// Product over blocks of coproducts, times the congruence factors.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpaceDescriptor {
    /// No non-forking extension exists.
    pub empty: bool,
    pub factors: Vec<Val1Factor>,
    pub primes: Vec<PrimeFactor>,
    pub notes: Vec<String>,
}

impl SpaceDescriptor {
    pub fn empty() -> Self {
        SpaceDescriptor { empty: true, factors: Vec::new(), primes: Vec::new(), notes: Vec::new() }
    }

    /// Number of points when every factor is finite.
    pub fn finite_size(&self) -> Option<usize> {
        if self.empty {
            return Some(0);
        }
        let mut n = 1usize;
        for f in &self.factors {
            if f.coproduct.iter().any(|s| s.parameters > 0) {
                return None;
            }
            n *= f.coproduct.len();
        }
        if self.primes.iter().any(|p| p.shape != PrimeShape::Point) {
            return None;
        }
        Some(n)
    }
}

/// Factors for a tuple that is cut-independent from `B` over `A` and free over `B`.
pub fn doag_factors(amb: &Ambient, cs: &[GroupElement], a: &SpanHandle, b: &SpanHandle) -> Result<(Vec<Val1Factor>, NormalFormBasis)> {
    let basis = normalize(amb, cs, a, b)?;
    let elems = &basis.elements;
    let val1 = val_blocks(amb, elems, b, 1)?;
    if !val1.in_span.is_empty() {
        return Err(OagError::config("a normalized element lies in B"));
    }
    let arch_flags = par::map(elems, |e| cut_profile(amb, e, b).map(|p| p.is_archimedean())).into_iter().collect::<Result<Vec<_>>>()?;
    let mut factors = Vec::new();
    for blk in &val1.blocks {
        let archimedean: Vec<usize> = blk.members.iter().copied().filter(|&i| arch_flags[i]).collect();
        let ramified: Vec<usize> = blk.members.iter().copied().filter(|&i| !arch_flags[i]).collect();
        let classification = if ramified.is_empty() {
            None
        } else {
            let part: Vec<GroupElement> = ramified.iter().map(|&i| elems[i].clone()).collect();
            Some(classify_block(amb, &part, a, b)?)
        };
        let plans = match &classification {
            Some(c) => strong_extensions(c)?,
            None => vec![GluingPlan { steps: Vec::new() }],
        };
        let coproduct = plans
            .iter()
            .map(|plan| {
                let mut labels = vec![ExtensionSide::Outer; plan.steps.len()];
                let mut outer_points = 0;
                for s in &plan.steps {
                    labels[s.sub_block] = s.side;
                    if s.side == ExtensionSide::Outer {
                        outer_points += classification.as_ref().unwrap().sub_blocks[s.sub_block].members.len();
                    }
                }
                let k = archimedean.len();
                Summand { labels, parameters: k, ambient_dim: if k == 0 { 0 } else { k + outer_points } }
            })
            .collect();
        factors.push(Val1Factor { key: blk.key, members: blk.members.clone(), archimedean, ramified, classification, coproduct });
    }
    Ok((factors, basis))
}

/// The ambient with the unit slot removed, and the projection onto it.
fn quotient_by_unit(amb: &Ambient) -> Result<Option<Ambient>> {
    let k = amb.nslots();
    if k < 2 {
        return Ok(None);
    }
    let slots = (0..k - 1).map(|s| amb.generators(s).to_vec()).collect();
    Ambient::new(amb.field().clone(), ModelKind::Dense, slots).map(Some)
}

fn project(q: &Ambient, x: &GroupElement) -> GroupElement {
    GroupElement::from_coords(x.coords[..q.dim()].to_vec())
}

/// Descriptor of the space of non-forking global extensions of the scene's type.
///
/// Discrete scenes are described through the quotient by the integers, which
/// drops the unit slot.
pub fn space_descriptor(scene: &Scene) -> Result<(SpaceDescriptor, Verdict)> {
    let v = decide_forking(scene)?;
    if !v.independent.forking {
        return Ok((SpaceDescriptor::empty(), v));
    }
    let amb = &scene.ambient;
    let cs: Vec<GroupElement> = v.reduced.iter().map(|&i| scene.c[i].clone()).collect();
    let mut notes = Vec::new();
    let factors = if cs.is_empty() {
        Vec::new()
    } else if amb.kind() == ModelKind::Discrete {
        let q = quotient_by_unit(amb)?.ok_or_else(|| OagError::internal("free tuple over a group with only the unit slot"))?;
        let pa: Vec<GroupElement> = scene.a.iter().map(|x| project(&q, x)).collect();
        let mut pb = pa.clone();
        pb.extend(scene.b.iter().map(|x| project(&q, x)));
        let pc: Vec<GroupElement> = cs.iter().map(|x| project(&q, x)).collect();
        notes.push("described in the quotient by the integers".to_string());
        let (f, basis) = doag_factors(&q, &pc, &SpanHandle::new(&q, &pa)?, &SpanHandle::new(&q, &pb)?)?;
        notes.extend(basis.diagnostics);
        f
    } else {
        let (f, basis) = doag_factors(amb, &cs, &scene.a_span()?, &scene.b_span()?)?;
        notes.extend(basis.diagnostics);
        f
    };
    let mut primes = Vec::new();
    for p in &scene.congruence.primes {
        let shape = match p.kind {
            PrimeKind::Divisible => continue,
            PrimeKind::InfiniteIndex => PrimeShape::Point,
            PrimeKind::FiniteIndex => {
                let holds = v.invariance_extra.iter().find(|c| c.l == p.l).map_or(true, |c| c.holds);
                if holds {
                    PrimeShape::Point
                } else {
                    PrimeShape::LadicSubspace { dim: cs.len() }
                }
            }
        };
        primes.push(PrimeFactor { l: p.l, kind: p.kind, shape });
    }
    Ok((SpaceDescriptor { empty: false, factors, primes, notes }, v))
}
