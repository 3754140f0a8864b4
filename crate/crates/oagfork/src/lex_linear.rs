//! Linear constraints over a lexicographic group, decided by slot-wise sign
//! expansion and exact Fourier-Motzkin elimination over the real field.
//!
//! A constraint `form REL 0` on rational unknowns expands into a disjunction of
//! branches. Each branch fixes a leading slot: the coordinates of all earlier
//! slots vanish (rational equations) and the field value of the leading slot
//! has a strict sign (a linear inequality with field coefficients).

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use crate::error::{OagError, Result};
use crate::linalg::{self, Rref, Row};
use crate::numberfield::{FieldElement, FieldSpec};
use crate::oag_model::{Ambient, GroupElement};
use crate::par;
use crate::rational::{fmt_q, simplest_between, Q};

pub type Var = usize;

/// `sum_v t_v * terms[v] + constant` with rational unknowns `t_v`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearForm {
    pub terms: BTreeMap<Var, GroupElement>,
    pub constant: GroupElement,
}

impl LinearForm {
    pub fn constant(c: GroupElement) -> Self {
        LinearForm { terms: BTreeMap::new(), constant: c }
    }

    pub fn var(v: Var, dir: GroupElement) -> Self {
        let zero = GroupElement::zero(dir.dim());
        let mut terms = BTreeMap::new();
        terms.insert(v, dir);
        LinearForm { terms, constant: zero }
    }

    pub fn add(&self, o: &LinearForm) -> LinearForm {
        let mut terms = self.terms.clone();
        for (v, g) in &o.terms {
            let e = terms.entry(*v).or_insert_with(|| GroupElement::zero(g.dim()));
            *e = e.add(g);
        }
        LinearForm { terms, constant: self.constant.add(&o.constant) }
    }

    pub fn neg(&self) -> LinearForm {
        self.scale(&-Q::one())
    }

    pub fn sub(&self, o: &LinearForm) -> LinearForm {
        self.add(&o.neg())
    }

    pub fn scale(&self, k: &Q) -> LinearForm {
        LinearForm {
            terms: self.terms.iter().map(|(v, g)| (*v, g.scale(k))).collect(),
            constant: self.constant.scale(k),
        }
    }

    pub fn eval(&self, t: &[Q]) -> GroupElement {
        let mut out = self.constant.clone();
        for (v, g) in &self.terms {
            out.add_scaled(&t[*v], g);
        }
        out
    }

    fn max_var(&self) -> Option<Var> {
        self.terms.keys().next_back().copied()
    }
}

/// Relation of a form to zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rel {
    Lt,
    Le,
    Eq,
    Gt,
    Ge,
    /// The coordinates of slots `0..=slot` vanish.
    Infinitesimal { slot: usize },
    /// Strictly positive (or negative) with leading slot strictly between
    /// `upper` and `lower` (slot indices; `None` means unbounded).
    Window { positive: bool, upper: Option<usize>, lower: Option<usize> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub form: LinearForm,
    pub rel: Rel,
}

impl Atom {
    pub fn new(form: LinearForm, rel: Rel) -> Self {
        Atom { form, rel }
    }

    /// Exact evaluation at a rational point.
    pub fn holds(&self, amb: &Ambient, t: &[Q]) -> Result<bool> {
        let v = self.form.eval(t);
        let s = amb.sign(&v)?;
        Ok(match &self.rel {
            Rel::Lt => s == Ordering::Less,
            Rel::Le => s != Ordering::Greater,
            Rel::Eq => s == Ordering::Equal,
            Rel::Gt => s == Ordering::Greater,
            Rel::Ge => s != Ordering::Less,
            Rel::Infinitesimal { slot } => amb.leading_slot(&v).map_or(true, |u| u > *slot),
            Rel::Window { positive, upper, lower } => {
                let want = if *positive { Ordering::Greater } else { Ordering::Less };
                match amb.leading_slot(&v) {
                    None => false,
                    Some(u) => {
                        s == want && upper.map_or(true, |t| u > t) && lower.map_or(true, |l| u < l)
                    }
                }
            }
        })
    }
}

/// `sum coeffs * t + constant = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct RatRow {
    pub coeffs: Vec<Q>,
    pub constant: Q,
}

/// `sum coeffs * t + constant > 0` (strict) or `>= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct NfRow {
    pub coeffs: Vec<FieldElement>,
    pub constant: FieldElement,
    pub strict: bool,
}

impl NfRow {
    pub fn rational(coeffs: &[Q], constant: Q, strict: bool) -> NfRow {
        NfRow {
            coeffs: coeffs.iter().map(|c| FieldElement::rational(c.clone())).collect(),
            constant: FieldElement::rational(constant),
            strict,
        }
    }

    fn is_trivial(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }
}

/// A conjunction of rational equations and field-coefficient inequalities.
#[derive(Clone, Debug, Default)]
pub struct SlotSystem {
    pub nvars: usize,
    pub eqs: Vec<RatRow>,
    pub ineqs: Vec<NfRow>,
    /// Which branch of each source constraint produced this system.
    pub trail: Vec<String>,
}

impl SlotSystem {
    pub fn new(nvars: usize) -> Self {
        SlotSystem { nvars, ..Default::default() }
    }

    pub fn dump(&self) -> String {
        let mut s = format!("system over {} unknowns [{}]\n", self.nvars, self.trail.join(", "));
        for e in &self.eqs {
            let cs: Vec<String> = e.coeffs.iter().map(fmt_q).collect();
            s += &format!("  [{}] . t + {} = 0\n", cs.join(", "), fmt_q(&e.constant));
        }
        for r in &self.ineqs {
            let cs: Vec<String> = r.coeffs.iter().map(|c| c.to_string()).collect();
            s += &format!("  [{}] . t + {} {} 0\n", cs.join(", "), r.constant, if r.strict { ">" } else { ">=" });
        }
        s
    }
}

/// Outcome of a feasibility query.
#[derive(Clone, Debug, PartialEq)]
pub enum Feasibility {
    Sat(Vec<Q>),
    Unsat,
}

impl Feasibility {
    pub fn is_sat(&self) -> bool {
        matches!(self, Feasibility::Sat(_))
    }
}

/// One disjunct of an expanded atom: coordinates of `zero_slots` vanish and,
/// optionally, the value in a slot has a strict sign.
#[derive(Clone, Debug)]
struct Branch {
    zero_slots: Vec<usize>,
    sign: Option<(usize, bool)>,
    label: String,
}

fn expand_rel(k: usize, rel: &Rel) -> Vec<Branch> {
    let lead = |u: usize, positive: bool, from: usize| Branch {
        zero_slots: (from..u).collect(),
        sign: Some((u, positive)),
        label: format!("lead slot{u} {}", if positive { ">0" } else { "<0" }),
    };
    let all_zero = || Branch { zero_slots: (0..k).collect(), sign: None, label: "zero".into() };
    match rel {
        Rel::Lt => (0..k).map(|u| lead(u, false, 0)).collect(),
        Rel::Gt => (0..k).map(|u| lead(u, true, 0)).collect(),
        Rel::Le => (0..k).map(|u| lead(u, false, 0)).chain(std::iter::once(all_zero())).collect(),
        Rel::Ge => (0..k).map(|u| lead(u, true, 0)).chain(std::iter::once(all_zero())).collect(),
        Rel::Eq => vec![all_zero()],
        Rel::Infinitesimal { slot } => vec![Branch {
            zero_slots: (0..=(*slot).min(k.saturating_sub(1))).collect(),
            sign: None,
            label: format!("below slot{slot}"),
        }],
        Rel::Window { positive, upper, lower } => {
            let start = upper.map_or(0, |t| t + 1);
            let end = lower.unwrap_or(k).min(k);
            (start..end).map(|u| lead(u, *positive, 0)).collect()
        }
    }
}

fn materialize(amb: &Ambient, nvars: usize, form: &LinearForm, b: &Branch) -> (Vec<RatRow>, Option<NfRow>) {
    let mut eqs = Vec::new();
    for &s in &b.zero_slots {
        for j in amb.slot_range(s) {
            let coeffs: Row = (0..nvars).map(|v| form.terms.get(&v).map_or_else(Q::zero, |g| g.coords[j].clone())).collect();
            let constant = form.constant.coords[j].clone();
            if linalg::is_zero_row(&coeffs) && constant.is_zero() {
                continue;
            }
            eqs.push(RatRow { coeffs, constant });
        }
    }
    let ineq = b.sign.map(|(u, positive)| {
        let sg = if positive { Q::one() } else { -Q::one() };
        let coeffs = (0..nvars)
            .map(|v| form.terms.get(&v).map_or_else(FieldElement::zero, |g| amb.slot_value(g, u).scale(&sg)))
            .collect();
        NfRow { coeffs, constant: amb.slot_value(&form.constant, u).scale(&sg), strict: true }
    });
    (eqs, ineq)
}

/// Whether the rational equations are consistent.
fn eqs_consistent(eqs: &[RatRow], nvars: usize) -> bool {
    let rows: Vec<Row> = eqs
        .iter()
        .map(|e| {
            let mut r = e.coeffs.clone();
            r.push(e.constant.clone());
            r
        })
        .collect();
    let ech = Rref::new(&rows, nvars + 1);
    !ech.pivots.contains(&nvars)
}

/// Branches of each atom, flattened into candidate slot systems, pruned by
/// consistency of the rational equations.
pub fn expand(amb: &Ambient, nvars: usize, atoms: &[Atom]) -> Vec<SlotSystem> {
    let k = amb.nslots();
    let per_atom: Vec<Vec<(Vec<RatRow>, Option<NfRow>, String)>> = atoms
        .iter()
        .enumerate()
        .map(|(i, a)| {
            expand_rel(k, &a.rel)
                .into_iter()
                .map(|b| {
                    let (e, n) = materialize(amb, nvars, &a.form, &b);
                    (e, n, format!("#{i}: {}", b.label))
                })
                .filter(|(e, n, _)| {
                    // a sign row with no unknowns and a zero constant can never hold
                    !(n.as_ref().is_some_and(|r| r.is_trivial() && r.constant.is_zero())) && eqs_consistent(e, nvars)
                })
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    let mut stack: Vec<(usize, SlotSystem)> = vec![(0, SlotSystem::new(nvars))];
    while let Some((i, sys)) = stack.pop() {
        if i == per_atom.len() {
            out.push(sys);
            continue;
        }
        for (eqs, ineq, label) in per_atom[i].iter().rev() {
            let mut next = sys.clone();
            next.eqs.extend(eqs.iter().cloned());
            if !eqs.is_empty() && !eqs_consistent(&next.eqs, nvars) {
                continue;
            }
            if let Some(r) = ineq {
                next.ineqs.push(r.clone());
            }
            next.trail.push(label.clone());
            stack.push((i + 1, next));
        }
    }
    out
}

/// Decides whether the conjunction of atoms has a rational solution and returns one.
pub fn feasible(amb: &Ambient, nvars: usize, atoms: &[Atom]) -> Result<Feasibility> {
    for a in atoms {
        amb.check_dim(&a.form.constant)?;
        for g in a.form.terms.values() {
            amb.check_dim(g)?;
        }
        if a.form.max_var().is_some_and(|v| v >= nvars) {
            return Err(OagError::config("atom mentions an unknown beyond nvars"));
        }
    }
    let systems = expand(amb, nvars, atoms);
    if log::log_enabled!(log::Level::Trace) {
        for sys in &systems {
            log::trace!("{}", sys.dump());
        }
    }
    let found = par::find_map_first(&systems, |sys| match solve_system(amb.field(), sys) {
        Ok(Some(w)) => Some(Ok(w)),
        Ok(None) => None,
        Err(e) => Some(Err(e)),
    });
    match found {
        None => Ok(Feasibility::Unsat),
        Some(Err(e)) => Err(e),
        Some(Ok(w)) => {
            for a in atoms {
                if !a.holds(amb, &w)? {
                    return Err(OagError::internal("feasibility witness failed replay"));
                }
            }
            Ok(Feasibility::Sat(w))
        }
    }
}

/// Parametrization of the solutions of the equations: `t = base + sum_f t_f * dirs[f]`
/// over the free unknowns.
struct EqSolution {
    free: Vec<Var>,
    base: Row,
    dirs: Vec<Row>,
}

fn solve_eqs(eqs: &[RatRow], nvars: usize) -> Option<EqSolution> {
    let rows: Vec<Row> = eqs
        .iter()
        .map(|e| {
            let mut r = e.coeffs.clone();
            r.push(e.constant.clone());
            r
        })
        .collect();
    let ech = Rref::new(&rows, nvars + 1);
    if ech.pivots.contains(&nvars) {
        return None;
    }
    let free: Vec<Var> = (0..nvars).filter(|v| !ech.pivots.contains(v)).collect();
    let mut base = linalg::zero_row(nvars);
    for (row, &p) in ech.basis().iter().zip(&ech.pivots) {
        base[p] = -row[nvars].clone();
    }
    let dirs = free
        .iter()
        .map(|&f| {
            let mut d = linalg::unit_row(nvars, f);
            for (row, &p) in ech.basis().iter().zip(&ech.pivots) {
                d[p] = -row[f].clone();
            }
            d
        })
        .collect();
    Some(EqSolution { free, base, dirs })
}

/// Rewrites inequalities in terms of the free unknowns of the equations.
fn substitute(ineqs: &[NfRow], sol: &EqSolution) -> Vec<NfRow> {
    ineqs
        .iter()
        .map(|r| {
            let mut constant = r.constant.clone();
            for (c, b) in r.coeffs.iter().zip(&sol.base) {
                constant = constant.add(&c.scale(b));
            }
            let coeffs = sol
                .dirs
                .iter()
                .map(|d| {
                    let mut acc = FieldElement::zero();
                    for (c, x) in r.coeffs.iter().zip(d) {
                        acc = acc.add(&c.scale(x));
                    }
                    acc
                })
                .collect();
            NfRow { coeffs, constant, strict: r.strict }
        })
        .collect()
}

/// One Fourier-Motzkin step on variable `x`.
fn fm_step(field: &FieldSpec, rows: &[NfRow], x: usize) -> Result<Vec<NfRow>> {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    let mut out = Vec::new();
    for r in rows {
        match field.sign(&r.coeffs[x])? {
            Ordering::Greater => pos.push(r),
            Ordering::Less => neg.push(r),
            Ordering::Equal => {
                let mut r = r.clone();
                r.coeffs[x] = FieldElement::zero();
                out.push(r);
            }
        }
    }
    for p in &pos {
        for n in &neg {
            let a = &p.coeffs[x];
            let b = n.coeffs[x].neg();
            // b * p + a * n has zero coefficient on x; both multipliers are positive
            let coeffs = p
                .coeffs
                .iter()
                .zip(&n.coeffs)
                .enumerate()
                .map(|(i, (pc, nc))| {
                    if i == x {
                        FieldElement::zero()
                    } else {
                        field.mul(&b, pc).add(&field.mul(a, nc))
                    }
                })
                .collect();
            let constant = field.mul(&b, &p.constant).add(&field.mul(a, &n.constant));
            out.push(NfRow { coeffs, constant, strict: p.strict || n.strict });
        }
    }
    dedup(&mut out);
    Ok(out)
}

fn dedup(rows: &mut Vec<NfRow>) {
    let mut seen: Vec<NfRow> = Vec::with_capacity(rows.len());
    for r in rows.drain(..) {
        if let Some(s) = seen.iter_mut().find(|s| s.coeffs == r.coeffs && s.constant == r.constant) {
            s.strict |= r.strict;
        } else {
            seen.push(r);
        }
    }
    *rows = seen;
}

/// Checks the variable-free rows; `Ok(false)` if one is violated.
fn constants_hold(field: &FieldSpec, rows: &[NfRow]) -> Result<bool> {
    for r in rows {
        let s = field.sign(&r.constant)?;
        if s == Ordering::Less || (r.strict && s == Ordering::Equal) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Projects the system onto the unknowns not in `vars`. Equations involving an
/// eliminated unknown are used for substitution; inequalities are combined
/// pairwise with positive multipliers. The result describes the exact real
/// projection; unknown indices are preserved.
pub fn fm_eliminate(field: &FieldSpec, sys: &SlotSystem, vars: &[Var]) -> Result<SlotSystem> {
    let n = sys.nvars;
    let mut eqs = sys.eqs.clone();
    let mut ineqs = sys.ineqs.clone();
    for &x in vars {
        if x >= n {
            return Err(OagError::config(format!("cannot eliminate unknown {x} of {n}")));
        }
        if let Some(i) = eqs.iter().position(|e| !e.coeffs[x].is_zero()) {
            let pivot = eqs.remove(i);
            let inv = Q::one() / &pivot.coeffs[x];
            // t_x = -(rest + constant) / coeff
            let expr: Row = pivot.coeffs.iter().map(|c| -c * &inv).collect();
            let expr_c = -&pivot.constant * &inv;
            for e in eqs.iter_mut() {
                let f = e.coeffs[x].clone();
                if f.is_zero() {
                    continue;
                }
                linalg::axpy(&mut e.coeffs, &f, &expr);
                e.coeffs[x] = Q::zero();
                e.constant += &f * &expr_c;
            }
            for r in ineqs.iter_mut() {
                let f = r.coeffs[x].clone();
                if f.is_zero() {
                    continue;
                }
                for (j, ej) in expr.iter().enumerate() {
                    if j != x && !ej.is_zero() {
                        r.coeffs[j] = r.coeffs[j].add(&f.scale(ej));
                    }
                }
                r.constant = r.constant.add(&f.scale(&expr_c));
                r.coeffs[x] = FieldElement::zero();
            }
        } else {
            ineqs = fm_step(field, &ineqs, x)?;
        }
    }
    let mut contradiction = false;
    eqs.retain(|e| {
        if linalg::is_zero_row(&e.coeffs) {
            contradiction |= !e.constant.is_zero();
            false
        } else {
            true
        }
    });
    let mut kept = Vec::new();
    for r in ineqs {
        if r.is_trivial() {
            let s = field.sign(&r.constant)?;
            if s == Ordering::Less || (r.strict && s == Ordering::Equal) {
                contradiction = true;
            }
        } else {
            kept.push(r);
        }
    }
    if contradiction {
        kept = vec![NfRow { coeffs: vec![FieldElement::zero(); n], constant: FieldElement::zero(), strict: true }];
    }
    let mut trail = sys.trail.clone();
    trail.push(format!("eliminated {vars:?}"));
    let out = SlotSystem { nvars: n, eqs, ineqs: kept, trail };
    log::trace!("{}", out.dump());
    Ok(out)
}

/// Exact real feasibility of a slot system.
pub fn system_feasible(field: &FieldSpec, sys: &SlotSystem) -> Result<bool> {
    let Some(sol) = solve_eqs(&sys.eqs, sys.nvars) else { return Ok(false) };
    let mut rows = substitute(&sys.ineqs, &sol);
    for x in 0..sol.free.len() {
        rows = fm_step(field, &rows, x)?;
    }
    constants_hold(field, &rows)
}

/// Feasibility with a rational witness. Systems whose inequalities are all
/// strict always have rational witnesses when feasible; for non-strict rows a
/// witness is produced when the boundary values encountered are rational.
pub fn solve_system(field: &FieldSpec, sys: &SlotSystem) -> Result<Option<Vec<Q>>> {
    let Some(sol) = solve_eqs(&sys.eqs, sys.nvars) else { return Ok(None) };
    let nfree = sol.free.len();
    let base_rows = substitute(&sys.ineqs, &sol);
    // stage[i] involves free unknowns i.. only
    let mut stages = vec![base_rows];
    for x in 0..nfree {
        let next = fm_step(field, stages.last().unwrap(), x)?;
        stages.push(next);
    }
    if !constants_hold(field, stages.last().unwrap())? {
        return Ok(None);
    }
    let mut vals: Vec<Q> = vec![Q::zero(); nfree];
    for x in (0..nfree).rev() {
        match pick_value(field, &stages[x], x, &vals)? {
            Some(v) => vals[x] = v,
            None => return Ok(None),
        }
    }
    let mut t = sol.base.clone();
    for (v, d) in vals.iter().zip(&sol.dirs) {
        linalg::axpy(&mut t, v, d);
    }
    // exact confirmation
    for r in &sys.ineqs {
        let mut acc = r.constant.clone();
        for (c, x) in r.coeffs.iter().zip(&t) {
            acc = acc.add(&c.scale(x));
        }
        let s = field.sign(&acc)?;
        if s == Ordering::Less || (r.strict && s == Ordering::Equal) {
            return Ok(None);
        }
    }
    Ok(Some(t))
}

/// Chooses a rational value for unknown `x` given values for the later unknowns.
fn pick_value(field: &FieldSpec, rows: &[NfRow], x: usize, vals: &[Q]) -> Result<Option<Q>> {
    // each row becomes a * t_x + b (>|>=) 0
    let mut bounds: Vec<(FieldElement, FieldElement, bool, bool)> = Vec::new(); // (a, b, is_lower, strict)
    for r in rows {
        let mut b = r.constant.clone();
        for (j, c) in r.coeffs.iter().enumerate().skip(x + 1) {
            if !c.is_zero() {
                b = b.add(&c.scale(&vals[j]));
            }
        }
        let a = r.coeffs[x].clone();
        match field.sign(&a)? {
            Ordering::Equal => {}
            Ordering::Greater => bounds.push((a, b, true, r.strict)),
            Ordering::Less => bounds.push((a, b, false, r.strict)),
        }
    }
    if bounds.is_empty() {
        return Ok(Some(Q::zero()));
    }
    // rational bounds are handled exactly
    let mut width = Q::new(1.into(), (1u64 << 20).into());
    for _ in 0..60 {
        let mut lo: Option<(Q, bool)> = None; // (bound, exact)
        let mut hi: Option<(Q, bool)> = None;
        for (a, b, is_lower, _) in &bounds {
            // bound value is -b / a
            let (alo, ahi) = field.enclose(a, &width)?;
            let (blo, bhi) = field.enclose(b, &width)?;
            if alo.is_zero() || ahi.is_zero() || (alo.is_negative() != ahi.is_negative()) {
                continue;
            }
            let cands = [-&blo / &alo, -&blo / &ahi, -&bhi / &alo, -&bhi / &ahi];
            let bmin = cands.iter().min().unwrap().clone();
            let bmax = cands.iter().max().unwrap().clone();
            let exact = alo == ahi && blo == bhi;
            if *is_lower {
                if lo.as_ref().map_or(true, |(v, _)| bmax > *v) {
                    lo = Some((bmax, exact));
                }
            } else {
                if hi.as_ref().map_or(true, |(v, _)| bmin < *v) {
                    hi = Some((bmin, exact));
                }
            }
        }
        let cand = match (&lo, &hi) {
            (None, None) => Some(Q::zero()),
            (Some((l, _)), None) => Some(l.floor() + Q::one()),
            (None, Some((h, _))) => Some(h.ceil() - Q::one()),
            (Some((l, _)), Some((h, _))) if l < h => Some(simplest_between(l, h)),
            (Some((l, le)), Some((h, he))) if *le && *he => {
                if l == h {
                    Some(l.clone())
                } else {
                    return Ok(None);
                }
            }
            _ => None,
        };
        if let Some(v) = cand {
            if bounds_hold(field, &bounds, &v)? {
                return Ok(Some(v));
            }
        }
        width = &width * &width;
        if width < Q::new(1.into(), num_bigint::BigInt::from(2).pow(4096)) {
            break;
        }
    }
    Ok(None)
}

fn bounds_hold(field: &FieldSpec, bounds: &[(FieldElement, FieldElement, bool, bool)], v: &Q) -> Result<bool> {
    for (a, b, _, strict) in bounds {
        let s = field.sign(&a.scale(v).add(b))?;
        if s == Ordering::Less || (*strict && s == Ordering::Equal) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Whether some element of `span` lies in the closed interval `[lo, hi]`.
pub fn interval_meets_span(amb: &Ambient, lo: &GroupElement, hi: &GroupElement, span: &crate::oag_model::SpanHandle) -> Result<bool> {
    Ok(meeting_point(amb, lo, hi, span)?.is_some())
}

/// A span element in `[lo, hi]`, if any.
pub fn meeting_point(
    amb: &Ambient,
    lo: &GroupElement,
    hi: &GroupElement,
    span: &crate::oag_model::SpanHandle,
) -> Result<Option<GroupElement>> {
    amb.check_dim(lo)?;
    amb.check_dim(hi)?;
    let basis = span.basis();
    let n = basis.len();
    let mut a = LinearForm::constant(amb.zero());
    for (i, b) in basis.iter().enumerate() {
        a = a.add(&LinearForm::var(i, b.clone()));
    }
    let atoms = [
        Atom::new(LinearForm::constant(lo.clone()).sub(&a), Rel::Le),
        Atom::new(a.sub(&LinearForm::constant(hi.clone())), Rel::Le),
    ];
    Ok(match feasible(amb, n, &atoms)? {
        Feasibility::Sat(t) => Some(a.eval(&t)),
        Feasibility::Unsat => None,
    })
}
