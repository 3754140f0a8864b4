//! JSON reports for the command line. Every exact rational, including integer
//! coefficients, is written as a `"p/q"` string; counts, indices, primes and
//! exponents are plain JSON numbers. The schema is documented in the README.

use num_bigint::BigInt;
use serde_json::{json, Map, Value};

use crate::block_theory::{BlockDecomposition, NormalFormBasis, NormalFormReport, Separation};
use crate::cut_analysis::TupleWitness;
use crate::extension_space::{strong_extensions, SpaceDescriptor};
use crate::oag_model::{Ambient, GroupElement};
use crate::rational::{fmt_q, qi, Q};
use crate::verdict::{PrimeCondition, Verdict};

pub fn rationals(v: &[Q]) -> Value {
    Value::Array(v.iter().map(|x| Value::String(fmt_q(x))).collect())
}

pub fn integers(v: &[BigInt]) -> Value {
    Value::Array(v.iter().map(|x| Value::String(fmt_q(&qi(x)))).collect())
}

/// `{"class": "slot1", "slots": {"1": ["1/1", "0/1"]}}`, listing nonzero slots only.
pub fn element(amb: &Ambient, x: &GroupElement) -> Value {
    let mut slots = Map::new();
    for s in 0..amb.nslots() {
        let c = amb.slot_coords(x, s);
        if c.iter().any(|v| v != &Q::default()) {
            slots.insert(s.to_string(), rationals(c));
        }
    }
    json!({ "class": amb.arch_class(x).to_string(), "slots": slots })
}

fn tuple_witness(amb: &Ambient, w: &TupleWitness) -> Value {
    json!({
        "combination": rationals(&w.lambda),
        "point": element(amb, &w.point),
        "interval": { "low": element(amb, &w.interval.low), "high": element(amb, &w.interval.high) },
    })
}

fn prime_condition(c: &PrimeCondition) -> Value {
    json!({
        "l": c.l,
        "holds": c.holds,
        "bound": c.bound,
        "witness": c.witness.as_ref().map(|(u, n)| json!({ "combination": integers(u), "exponent": n })),
    })
}

pub fn verdict(amb: &Ambient, v: &Verdict) -> Value {
    json!({
        "independent": {
            "forking": v.independent.forking,
            "dividing": v.independent.dividing,
            "bounded_orbit": v.independent.bounded_orbit,
            "invariant": v.independent.invariant,
        },
        "condition1": {
            "holds": v.condition1.holds,
            "witness": v.condition1.witness.as_ref().map(|w| tuple_witness(amb, w)),
        },
        "condition2": v.condition2.iter().map(prime_condition).collect::<Vec<_>>(),
        "invariance_extra": v.invariance_extra.iter().map(prime_condition).collect::<Vec<_>>(),
        "reduced": v.reduced,
        "notes": v.notes,
    })
}

pub fn normal_form(amb: &Ambient, nf: &NormalFormBasis, check: &NormalFormReport) -> Value {
    let props: Map<String, Value> = check.properties().iter().map(|(k, c)| (k.to_string(), serde_json::to_value(c).unwrap())).collect();
    json!({
        "elements": nf.elements.iter().map(|e| element(amb, e)).collect::<Vec<_>>(),
        "index": serde_json::to_value(&nf.index).unwrap(),
        "matrix": nf.matrix.iter().map(|r| rationals(r)).collect::<Vec<_>>(),
        "translation": nf.translation.iter().map(|e| element(amb, e)).collect::<Vec<_>>(),
        "trace": serde_json::to_value(&nf.trace).unwrap(),
        "properties": props,
        "diagnostics": nf.diagnostics,
    })
}

pub fn blocks(base: &str, levels: &[(BlockDecomposition, Separation)]) -> Value {
    json!({
        "base": base,
        "levels": levels
            .iter()
            .map(|(d, s)| json!({ "level": d.level, "blocks": d.blocks, "in_span": d.in_span, "separation": s }))
            .collect::<Vec<_>>(),
    })
}

pub fn extensions(amb: &Ambient, d: &SpaceDescriptor, v: &Verdict) -> Value {
    let plans: Vec<Value> = d
        .factors
        .iter()
        .map(|f| match &f.classification {
            Some(c) => serde_json::to_value(strong_extensions(c).unwrap_or_default()).unwrap(),
            None => Value::Array(Vec::new()),
        })
        .collect();
    json!({
        "descriptor": serde_json::to_value(d).unwrap(),
        "finite_size": d.finite_size(),
        "gluing_plans": plans,
        "verdict": verdict(amb, v),
    })
}
