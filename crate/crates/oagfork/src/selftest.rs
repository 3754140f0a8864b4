//! Checks run by `oagfork selftest`: expected verdicts on the shipped scenes and
//! a seeded batch of randomized property checks.

use serde::Serialize;

use crate::block_theory::{check_normal_form, normalize, Phase};
use crate::cut_analysis::trapped_by_search;
use crate::error::Result;
use crate::goldens;
use crate::oag_model::GroupElement;
use crate::sample::{Limits, Sampler};
use crate::scene::Scene;
use crate::verdict::{decide_forking, free_subtuple, Verdict};

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), passed, detail: detail.into() }
    }
}

/// Expected `(forking-independent, invariant)` for each shipped scene.
pub const EXPECTED: [(&str, bool, bool); 7] = [
    ("orthogonality", true, true),
    ("ramified_pair", true, true),
    ("infinitesimal_base", true, true),
    ("two_root_field", true, true),
    ("trapped_interval", false, false),
    ("finite_parity", true, false),
    ("discrete_gap", true, true),
];

pub fn golden_checks() -> Vec<Check> {
    EXPECTED
        .iter()
        .map(|&(name, forking, invariant)| match goldens::load(name).and_then(|s| decide_forking(&s)) {
            Ok(v) => {
                let ok = v.independent.forking == forking && v.independent.invariant == invariant;
                Check::new(
                    format!("golden {name}"),
                    ok,
                    format!("forking-independent={} invariant={}", v.independent.forking, v.independent.invariant),
                )
            }
            Err(e) => Check::new(format!("golden {name}"), false, e.to_string()),
        })
        .collect()
}

fn same_verdict(x: &Verdict, y: &Verdict) -> bool {
    x.independent == y.independent
}

/// Properties of one random scene; returns a description of the first failure.
pub fn scene_properties(s: &Scene, sampler: &mut Sampler) -> Result<Option<String>> {
    let amb = &s.ambient;
    let v = decide_forking(s)?;
    let t = sampler.interdefinable(s);
    if !same_verdict(&v, &decide_forking(&t)?) {
        return Ok(Some("verdict changed under an interdefinable transform".into()));
    }
    let mut bigger = s.clone();
    bigger.b.push(sampler.element(amb, 4));
    if !v.independent.forking && decide_forking(&bigger)?.independent.forking {
        return Ok(Some("enlarging B turned a dependent tuple independent".into()));
    }
    let a = s.a_span()?;
    let b = s.b_span()?;
    if s.c.len() == 1 {
        let trapped = trapped_by_search(amb, &s.c[0], &a, &b)?;
        if trapped == v.condition1.holds {
            return Ok(Some("class criterion and feasibility search disagree on a single point".into()));
        }
    }
    if v.condition1.holds {
        let idx = free_subtuple(amb, &s.c, &a)?;
        let cs: Vec<GroupElement> = idx.iter().map(|&i| s.c[i].clone()).collect();
        let nf = normalize(amb, &cs, &a, &b)?;
        if !check_normal_form(amb, &nf.elements, &nf.index, &a, &b)?.all_hold() {
            return Ok(Some("normal form fails its property check".into()));
        }
        if let Some(msg) = measure_violation(&nf.trace) {
            return Ok(Some(msg));
        }
    }
    Ok(None)
}

/// First step of a loop whose measure does not strictly decrease, against the
/// state before it or against the previous step of the same loop.
pub fn measure_violation(trace: &[crate::block_theory::TraceStep]) -> Option<String> {
    for t in trace {
        if matches!(t.phase, Phase::Descent | Phase::Refine) && t.measure >= t.before {
            return Some(format!("{:?} measure {:?} -> {:?} does not decrease", t.phase, t.before, t.measure));
        }
    }
    for w in trace.windows(2) {
        let looped = matches!(w[0].phase, Phase::Descent | Phase::Refine);
        if looped && w[0].phase == w[1].phase && w[1].measure >= w[0].measure {
            return Some(format!("{:?} measure {:?} -> {:?} does not decrease", w[0].phase, w[0].measure, w[1].measure));
        }
    }
    None
}

pub fn property_checks(seed: u64, count: usize) -> Vec<Check> {
    let mut sampler = Sampler::new(seed);
    let lim = Limits::default();
    let mut failures = Vec::new();
    for i in 0..count {
        let s = sampler.scene(&lim);
        match scene_properties(&s, &mut sampler) {
            Ok(None) => {}
            Ok(Some(msg)) => failures.push(format!("scene {i}: {msg}")),
            Err(e) => failures.push(format!("scene {i}: {e}")),
        }
    }
    let detail = if failures.is_empty() { format!("{count} random scenes") } else { failures.join("; ") };
    vec![Check::new("random scene properties", failures.is_empty(), detail)]
}

pub fn run(seed: u64, count: usize) -> Vec<Check> {
    let mut out = golden_checks();
    out.extend(property_checks(seed, count));
    out
}
