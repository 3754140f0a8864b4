//! Scene files: a field, a slot layout, parameter sets, a tuple and congruence data.
//!
//! Scenes are TOML documents with `version = 1` and the sections `[field]`,
//! `[slots]`, `[A]`, `[B]`, `[c]` and optionally `[congruence]` and `[options]`.

use std::collections::BTreeMap;
use std::path::Path;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::congruence::{is_prime, PrimeKind};
use crate::error::{OagError, Result};
use crate::intlin::IVec;
use crate::linalg;
use crate::numberfield::{FieldElement, FieldSpec};
use crate::oag_model::{Ambient, GroupElement, ModelKind, SpanHandle};
use crate::rational::{parse_q, Q};

pub const SCENE_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
enum Lit {
    Int(i64),
    Str(String),
}

impl Lit {
    fn rational(&self) -> Result<Q> {
        match self {
            Lit::Int(i) => Ok(Q::from_integer((*i).into())),
            Lit::Str(s) => parse_q(s),
        }
    }

    fn integer(&self) -> Result<BigInt> {
        match self {
            Lit::Int(i) => Ok((*i).into()),
            Lit::Str(s) => s.trim().parse().map_err(|_| OagError::config(format!("invalid integer literal {s:?}"))),
        }
    }

    fn from_q(x: &Q) -> Lit {
        if x.is_integer() {
            Lit::Str(x.numer().to_string())
        } else {
            Lit::Str(format!("{}/{}", x.numer(), x.denom()))
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawField {
    minpoly: Vec<Lit>,
    interval: Vec<Lit>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSlots {
    #[serde(default = "dense")]
    kind: ModelKind,
    generators: Vec<Vec<Vec<Lit>>>,
}

fn dense() -> ModelKind {
    ModelKind::Dense
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSet {
    #[serde(default)]
    elements: Vec<BTreeMap<String, Vec<Lit>>>,
}

#[derive(Debug, Serialize, Deserialize, Clone, PartialEq)]
#[serde(untagged)]
enum RawBound {
    Fixed(u32),
    Named(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPrime {
    l: u64,
    kind: PrimeKind,
    #[serde(default)]
    dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_max: Option<u32>,
    #[serde(default)]
    residues: BTreeMap<String, Vec<Lit>>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCongruence {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_max: Option<RawBound>,
    #[serde(default)]
    prime: Vec<RawPrime>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptions {
    #[serde(default)]
    verbosity: u8,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScene {
    version: u32,
    field: RawField,
    slots: RawSlots,
    #[serde(rename = "A", default)]
    a: RawSet,
    #[serde(rename = "B", default)]
    b: RawSet,
    #[serde(default)]
    c: RawSet,
    #[serde(default)]
    congruence: RawCongruence,
    #[serde(default)]
    options: RawOptions,
}

/// Congruence data for one prime.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimeSpec {
    pub l: u64,
    pub kind: PrimeKind,
    /// Number of residue coordinates.
    pub dim: usize,
    pub n_max: Option<u32>,
    /// Residue vectors keyed by element label (`one`, `A0`, `B2`, `c1`, ...); missing labels are zero.
    pub residues: BTreeMap<String, IVec>,
}

impl PrimeSpec {
    pub fn residue(&self, label: &str) -> IVec {
        self.residues.get(label).cloned().unwrap_or_else(|| vec![BigInt::zero(); self.dim])
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct CongruenceSpec {
    /// `None` selects the automatic stabilization bound.
    pub n_max: Option<u32>,
    pub primes: Vec<PrimeSpec>,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct SceneOptions {
    pub verbosity: u8,
}

#[derive(Clone, Debug)]
pub struct Scene {
    pub ambient: Ambient,
    pub a: Vec<GroupElement>,
    pub b: Vec<GroupElement>,
    pub c: Vec<GroupElement>,
    pub congruence: CongruenceSpec,
    pub options: SceneOptions,
}

impl PartialEq for Scene {
    fn eq(&self, o: &Self) -> bool {
        self.ambient.field() == o.ambient.field()
            && self.ambient.kind() == o.ambient.kind()
            && (0..self.ambient.nslots()).all(|s| o.ambient.nslots() > s && self.ambient.generators(s) == o.ambient.generators(s))
            && self.ambient.nslots() == o.ambient.nslots()
            && self.a == o.a
            && self.b == o.b
            && self.c == o.c
            && self.congruence == o.congruence
            && self.options == o.options
    }
}

fn rationals(v: &[Lit]) -> Result<Vec<Q>> {
    v.iter().map(Lit::rational).collect()
}

fn parse_set(amb: &Ambient, raw: &RawSet, name: &str) -> Result<Vec<GroupElement>> {
    raw.elements
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let mut parts = BTreeMap::new();
            for (k, v) in m {
                let s: usize = k.trim().parse().map_err(|_| OagError::config(format!("{name}{i}: slot key {k:?} is not an index")))?;
                parts.insert(s, rationals(v)?);
            }
            amb.element(&parts).map_err(|e| OagError::config(format!("{name}{i}: {e}")))
        })
        .collect()
}

impl Scene {
    pub fn parse(text: &str) -> Result<Scene> {
        let raw: RawScene = toml::from_str(text).map_err(|e| OagError::config(format!("scene parse error: {e}")))?;
        if raw.version != SCENE_VERSION {
            return Err(OagError::config(format!("unsupported scene version {} (expected {SCENE_VERSION})", raw.version)));
        }
        if raw.field.interval.len() != 2 {
            return Err(OagError::config("field interval must have two endpoints"));
        }
        let field = FieldSpec::new(rationals(&raw.field.minpoly)?, raw.field.interval[0].rational()?, raw.field.interval[1].rational()?)?;
        let slots = raw
            .slots
            .generators
            .iter()
            .map(|gens| gens.iter().map(|g| Ok(FieldElement::from_coeffs(rationals(g)?))).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let ambient = Ambient::new(field, raw.slots.kind, slots)?;
        let a = parse_set(&ambient, &raw.a, "A")?;
        let b = parse_set(&ambient, &raw.b, "B")?;
        let c = parse_set(&ambient, &raw.c, "c")?;
        let n_max = match &raw.congruence.n_max {
            None => None,
            Some(RawBound::Fixed(n)) => Some(*n),
            Some(RawBound::Named(s)) if s == "auto" => None,
            Some(RawBound::Named(s)) => return Err(OagError::config(format!("n_max must be \"auto\" or a positive integer, got {s:?}"))),
        };
        let mut primes = Vec::new();
        for p in &raw.congruence.prime {
            let residues = p
                .residues
                .iter()
                .map(|(k, v)| Ok((k.clone(), v.iter().map(Lit::integer).collect::<Result<IVec>>()?)))
                .collect::<Result<BTreeMap<_, _>>>()?;
            primes.push(PrimeSpec { l: p.l, kind: p.kind, dim: p.dim, n_max: p.n_max, residues });
        }
        let scene = Scene {
            ambient,
            a,
            b,
            c,
            congruence: CongruenceSpec { n_max, primes },
            options: SceneOptions { verbosity: raw.options.verbosity },
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn load(path: &Path) -> Result<Scene> {
        let text = std::fs::read_to_string(path).map_err(|e| OagError::config(format!("cannot read {}: {e}", path.display())))?;
        Scene::parse(&text)
    }

    /// Labels of declared elements in residue maps, in declaration order.
    pub fn labels(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.ambient.kind() == ModelKind::Discrete {
            out.push("one".to_string());
        }
        out.extend((0..self.a.len()).map(|i| format!("A{i}")));
        out.extend((0..self.b.len()).map(|i| format!("B{i}")));
        out.extend((0..self.c.len()).map(|i| format!("c{i}")));
        out
    }

    pub fn element_by_label(&self, label: &str) -> Option<GroupElement> {
        if label == "one" {
            return self.ambient.unit();
        }
        let (set, idx) = label.split_at(1);
        let i: usize = idx.parse().ok()?;
        match set {
            "A" => self.a.get(i).cloned(),
            "B" => self.b.get(i).cloned(),
            "c" => self.c.get(i).cloned(),
            _ => None,
        }
    }

    /// Residue of a labelled element at a prime; the unit of a discrete group is pinned to the first coordinate.
    pub fn residue(&self, p: &PrimeSpec, label: &str) -> IVec {
        if label == "one" && self.ambient.kind() == ModelKind::Discrete && !p.residues.contains_key("one") {
            let mut v = vec![BigInt::zero(); p.dim];
            if p.dim > 0 {
                v[0] = BigInt::one();
            }
            return v;
        }
        p.residue(label)
    }

    fn validate(&self) -> Result<()> {
        let amb = &self.ambient;
        if amb.kind() == ModelKind::Discrete {
            let s = amb.nslots() - 1;
            for (name, set) in [("A", &self.a), ("B", &self.b), ("c", &self.c)] {
                for (i, e) in set.iter().enumerate() {
                    if !amb.slot_coords(e, s).iter().all(|x| x.is_integer()) {
                        return Err(OagError::config(format!("{name}{i}: unit-slot coefficients must be integers in a discrete scene")));
                    }
                }
            }
        }
        let labels = self.labels();
        let mut seen = Vec::new();
        for p in &self.congruence.primes {
            if !is_prime(p.l) {
                return Err(OagError::config(format!("{} is not prime", p.l)));
            }
            if seen.contains(&p.l) {
                return Err(OagError::config(format!("prime {} declared twice", p.l)));
            }
            seen.push(p.l);
            match p.kind {
                PrimeKind::Divisible => {
                    if !p.residues.is_empty() || p.dim != 0 {
                        return Err(OagError::config(format!("divisible prime {} carries no residue data", p.l)));
                    }
                }
                _ => {
                    if p.dim == 0 {
                        return Err(OagError::config(format!("prime {} needs dim >= 1", p.l)));
                    }
                }
            }
            if amb.kind() == ModelKind::Discrete && (p.kind != PrimeKind::FiniteIndex || p.dim != 1) {
                return Err(OagError::config(format!(
                    "prime {} in a discrete scene must be finite_index with dim = 1 (the quotient by l is cyclic of order l)",
                    p.l
                )));
            }
            for (k, v) in &p.residues {
                if !labels.contains(k) {
                    return Err(OagError::config(format!("prime {}: unknown residue label {k:?}", p.l)));
                }
                if v.len() != p.dim {
                    return Err(OagError::config(format!("prime {}: residue of {k} has {} coordinates, expected {}", p.l, v.len(), p.dim)));
                }
            }
            if amb.kind() == ModelKind::Discrete {
                if let Some(u) = p.residues.get("one") {
                    if u != &vec![BigInt::one()] {
                        return Err(OagError::config("the unit residue is pinned to the first coordinate"));
                    }
                }
            }
            self.check_relations(p, &labels)?;
        }
        Ok(())
    }

    /// Integer relations among declared elements must hold among their residues.
    fn check_relations(&self, p: &PrimeSpec, labels: &[String]) -> Result<()> {
        if p.kind == PrimeKind::Divisible {
            return Ok(());
        }
        let elems: Vec<GroupElement> = labels.iter().map(|l| self.element_by_label(l).unwrap()).collect();
        let vecs: Vec<linalg::Row> = elems.iter().map(|e| e.coords.clone()).collect();
        for rel in linalg::relations(&vecs, self.ambient.dim()) {
            let ints = crate::rational::primitive_integer(&rel);
            let mut sum = vec![BigInt::zero(); p.dim];
            for (k, l) in ints.iter().zip(labels) {
                for (s, r) in sum.iter_mut().zip(self.residue(p, l)) {
                    *s += k * r;
                }
            }
            if sum.iter().any(|x| !x.is_zero()) {
                let terms: Vec<String> = ints.iter().zip(labels).filter(|(k, _)| !k.is_zero()).map(|(k, l)| format!("{k}*{l}")).collect();
                return Err(OagError::config(format!(
                    "prime {}: the relation {} = 0 is violated by the declared residues",
                    p.l,
                    terms.join(" + ")
                )));
            }
        }
        Ok(())
    }

    /// Span of `A` and, in discrete scenes, the unit.
    pub fn a_span(&self) -> Result<SpanHandle> {
        let mut g = self.a.clone();
        g.extend(self.ambient.unit());
        SpanHandle::new(&self.ambient, &g)
    }

    /// Span of `A`, `B` and, in discrete scenes, the unit.
    pub fn b_span(&self) -> Result<SpanHandle> {
        let mut g = self.a.clone();
        g.extend(self.b.iter().cloned());
        g.extend(self.ambient.unit());
        SpanHandle::new(&self.ambient, &g)
    }

    pub fn with_tuple(&self, c: Vec<GroupElement>) -> Scene {
        let mut s = self.clone();
        s.c = c;
        s
    }

    fn raw_set(&self, set: &[GroupElement]) -> RawSet {
        let amb = &self.ambient;
        RawSet {
            elements: set
                .iter()
                .map(|e| {
                    (0..amb.nslots())
                        .filter(|&s| amb.slot_coords(e, s).iter().any(|x| !x.is_zero()))
                        .map(|s| (s.to_string(), amb.slot_coords(e, s).iter().map(Lit::from_q).collect()))
                        .collect()
                })
                .collect(),
        }
    }

    /// Canonical TOML text; parsing it yields an equal scene.
    pub fn to_toml(&self) -> String {
        let amb = &self.ambient;
        let f = amb.field();
        let (lo, hi) = f.interval();
        let deg = f.degree();
        let raw = RawScene {
            version: SCENE_VERSION,
            field: RawField { minpoly: f.minpoly().iter().map(Lit::from_q).collect(), interval: vec![Lit::from_q(lo), Lit::from_q(hi)] },
            slots: RawSlots {
                kind: amb.kind(),
                generators: (0..amb.nslots())
                    .map(|s| {
                        amb.generators(s)
                            .iter()
                            .map(|g| {
                                let mut c: Vec<Lit> = g.coeffs().iter().map(Lit::from_q).collect();
                                if c.is_empty() {
                                    c.push(Lit::Str("0".into()));
                                }
                                c.truncate(deg.max(1));
                                c
                            })
                            .collect()
                    })
                    .collect(),
            },
            a: self.raw_set(&self.a),
            b: self.raw_set(&self.b),
            c: self.raw_set(&self.c),
            congruence: RawCongruence {
                n_max: self.congruence.n_max.map(RawBound::Fixed),
                prime: self
                    .congruence
                    .primes
                    .iter()
                    .map(|p| RawPrime {
                        l: p.l,
                        kind: p.kind,
                        dim: p.dim,
                        n_max: p.n_max,
                        residues: p.residues.iter().map(|(k, v)| (k.clone(), v.iter().map(|x| Lit::Str(x.to_string())).collect())).collect(),
                    })
                    .collect(),
            },
            options: RawOptions { verbosity: self.options.verbosity },
        };
        toml::to_string(&raw).expect("scene serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
version = 1

[field]
minpoly = ["-2", "0", "1"]
interval = ["1", "2"]

[slots]
kind = "dense"
generators = [[["1"], ["0", "1"]], [["1"]]]

[A]
elements = [{ 0 = ["1", "0"] }]

[B]
elements = [{ 0 = ["0", "1"] }]

[c]
elements = [{ 0 = ["0", "1"], 1 = ["1/2"] }]

[congruence]
n_max = "auto"

[[congruence.prime]]
l = 2
kind = "infinite_index"
dim = 1
residues = { c0 = [1] }
"#;

    #[test]
    fn parse_and_round_trip() {
        let s = Scene::parse(SMALL).unwrap();
        assert_eq!(s.ambient.nslots(), 2);
        assert_eq!(s.c.len(), 1);
        assert_eq!(s.congruence.primes[0].residue("A0"), vec![BigInt::zero()]);
        let text = s.to_toml();
        let t = Scene::parse(&text).unwrap();
        assert_eq!(s, t);
        assert_eq!(text, t.to_toml());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Scene::parse(&SMALL.replace("version = 1", "version = 2")).is_err());
        assert!(Scene::parse(&SMALL.replace("{ 0 = [\"1\", \"0\"] }", "{ 0 = [\"1\"] }")).is_err());
        assert!(Scene::parse(&SMALL.replace("l = 2", "l = 4")).is_err());
        assert!(Scene::parse(&SMALL.replace("c0 = [1]", "d0 = [1]")).is_err());
        // B1 = 2*A0, so the residue of A0 must be matched by B1
        let bad = SMALL
            .replace("elements = [{ 0 = [\"0\", \"1\"] }]", "elements = [{ 0 = [\"0\", \"1\"] }, { 0 = [\"2\", \"0\"] }]")
            .replace("residues = { c0 = [1] }", "residues = { A0 = [1] }");
        assert!(Scene::parse(&bad).is_err());
        let good = bad.replace("residues = { A0 = [1] }", "residues = { A0 = [1], B1 = [2] }");
        assert!(Scene::parse(&good).is_ok());
    }
}
