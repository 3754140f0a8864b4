//! Brute-force oracles shared by the acceptance and property suites. Each one
//! recomputes a library answer by a different, deliberately naive route.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::VecDeque;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use oagfork::block_theory::BlockKey;
use oagfork::cut_analysis::cut_profile;
use oagfork::lex_linear::{NfRow, RatRow, SlotSystem};
use oagfork::numberfield::FieldElement;
use oagfork::oag_model::{combination, Ambient, GroupElement, SpanHandle};
use oagfork::rational::{q, Q};

// ---------------------------------------------------------------- numerics

fn horner(p: &[Q], x: &Q) -> Q {
    p.iter().rev().fold(Q::zero(), |acc, c| acc * x + c)
}

/// Bisection enclosure of the unique root of `p` in `[lo, hi]` to width below `10^-digits`.
pub fn root_enclosure(p: &[Q], lo: &Q, hi: &Q, digits: u32) -> (Q, Q) {
    let eps = Q::new(BigInt::one(), num_traits::pow(BigInt::from(10), digits as usize));
    let (mut a, mut b) = (lo.clone(), hi.clone());
    let sa = horner(p, &a).is_positive();
    while &b - &a >= eps {
        let m = (&a + &b) / q(2);
        let v = horner(p, &m);
        if v.is_zero() {
            return (m.clone(), m);
        }
        if v.is_positive() == sa {
            a = m;
        } else {
            b = m;
        }
    }
    (a, b)
}

/// Sign of `e(root)` from a 50-digit enclosure, or `None` when the value is
/// too close to zero for that precision to settle it.
pub fn numeric_sign(minpoly: &[Q], lo: &Q, hi: &Q, e: &[Q]) -> Option<Ordering> {
    let (a, b) = root_enclosure(minpoly, lo, hi, 50);
    let v = horner(e, &a);
    if a == b {
        return Some(v.cmp(&Q::zero()));
    }
    let r = a.abs().max(b.abs()) + q(1);
    let mut lip = Q::zero();
    let mut rp = Q::one();
    for (k, c) in e.iter().enumerate().skip(1) {
        lip += c.abs() * q(k as i64) * &rp;
        rp *= &r;
    }
    if v.abs() > lip * (&b - &a) {
        Some(v.cmp(&Q::zero()))
    } else {
        None
    }
}

// ------------------------------------------------------- modular subgroups

/// The subgroup of `(Z/q)^m` generated by some vectors, by breadth-first search.
pub struct ModSubgroup {
    pub q: i64,
    pub m: usize,
    members: Vec<bool>,
}

fn encode(v: &[i64], q: i64) -> usize {
    v.iter().fold(0usize, |acc, x| acc * q as usize + x.rem_euclid(q) as usize)
}

fn decode(mut i: usize, q: i64, m: usize) -> Vec<i64> {
    let mut v = vec![0; m];
    for k in (0..m).rev() {
        v[k] = (i % q as usize) as i64;
        i /= q as usize;
    }
    v
}

impl ModSubgroup {
    pub fn generated(gens: &[Vec<i64>], q: i64, m: usize) -> Self {
        let size = (q as usize).pow(m as u32);
        let mut members = vec![false; size];
        members[0] = true;
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            let v = decode(i, q, m);
            for g in gens {
                let w: Vec<i64> = v.iter().zip(g).map(|(a, b)| a + b).collect();
                let j = encode(&w, q);
                if !members[j] {
                    members[j] = true;
                    queue.push_back(j);
                }
            }
        }
        ModSubgroup { q, m, members }
    }

    pub fn contains(&self, v: &[i64]) -> bool {
        self.members[encode(v, self.q)]
    }

    pub fn size(&self) -> usize {
        self.members.iter().filter(|x| **x).count()
    }
}

pub fn to_i64(v: &[BigInt]) -> Vec<i64> {
    v.iter().map(|x| i64::try_from(x).expect("small residue")).collect()
}

pub fn to_big(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|x| BigInt::from(*x)).collect()
}

/// All vectors of `(Z/q)^k`.
pub fn all_vectors(q: i64, k: usize) -> impl Iterator<Item = Vec<i64>> {
    (0..(q as usize).pow(k as u32)).map(move |i| decode(i, q, k))
}

pub fn lin_comb(c: &[Vec<i64>], u: &[i64], m: usize) -> Vec<i64> {
    let mut z = vec![0; m];
    for (v, k) in c.iter().zip(u) {
        for (zi, vi) in z.iter_mut().zip(v) {
            *zi += k * vi;
        }
    }
    z
}

/// Rank over the rationals of integer vectors.
pub fn rank(vs: &[Vec<i64>]) -> usize {
    let rows: Vec<Vec<Q>> = vs.iter().map(|v| v.iter().map(|x| q(*x)).collect()).collect();
    rank_q(rows)
}

pub fn rank_q(mut rows: Vec<Vec<Q>>) -> usize {
    let ncols = rows.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else { continue };
        rows.swap(r, p);
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let f = &rows[i][c] / &rows[r][c];
                let pivot = rows[r].clone();
                for (x, y) in rows[i].iter_mut().zip(&pivot) {
                    *x -= &f * y;
                }
            }
        }
        r += 1;
    }
    r
}

// ------------------------------------------------------------ linear systems

/// `coeffs . x + constant` compared with zero: `Some(true)` strict, `Some(false)` weak, `None` equality.
#[derive(Clone, Debug)]
pub struct Row {
    pub coeffs: Vec<Q>,
    pub constant: Q,
    pub strict: Option<bool>,
}

impl Row {
    pub fn holds(&self, x: &[Q]) -> bool {
        let v: Q = self.coeffs.iter().zip(x).map(|(a, b)| a * b).sum::<Q>() + &self.constant;
        match self.strict {
            None => v.is_zero(),
            Some(true) => v.is_positive(),
            Some(false) => !v.is_negative(),
        }
    }
}

pub fn to_system(rows: &[Row], n: usize) -> SlotSystem {
    let mut sys = SlotSystem::new(n);
    for r in rows {
        match r.strict {
            None => sys.eqs.push(RatRow { coeffs: r.coeffs.clone(), constant: r.constant.clone() }),
            Some(s) => sys.ineqs.push(NfRow::rational(&r.coeffs, r.constant.clone(), s)),
        }
    }
    sys
}

/// Evaluates a system whose coefficients are rational.
pub fn system_holds(sys: &SlotSystem, x: &[Q]) -> bool {
    let rat = |f: &FieldElement| f.as_rational().expect("rational system");
    sys.eqs.iter().all(|e| (e.coeffs.iter().zip(x).map(|(a, b)| a * b).sum::<Q>() + &e.constant).is_zero())
        && sys.ineqs.iter().all(|r| {
            let v: Q = r.coeffs.iter().zip(x).map(|(a, b)| rat(a) * b).sum::<Q>() + rat(&r.constant);
            if r.strict {
                v.is_positive()
            } else {
                !v.is_negative()
            }
        })
}

fn solve_square(rows: &[Vec<Q>], rhs: &[Q]) -> Option<Vec<Q>> {
    let n = rows.len();
    let mut m: Vec<Vec<Q>> = rows.iter().zip(rhs).map(|(r, b)| r.iter().cloned().chain([b.clone()]).collect()).collect();
    for c in 0..n {
        let p = (c..n).find(|&i| !m[i][c].is_zero())?;
        m.swap(c, p);
        let piv = m[c][c].clone();
        for x in m[c].iter_mut() {
            *x /= &piv;
        }
        for i in 0..n {
            if i != c && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                let pr = m[c].clone();
                for (x, y) in m[i].iter_mut().zip(&pr) {
                    *x -= &f * y;
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n].clone()).collect())
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

/// Feasibility by vertex enumeration. Strict rows are tightened by a margin
/// below the least positive optimum any small integer system can have, which
/// turns them into weak rows; a nonempty closed polyhedron then contains a
/// point cut out by `n` independent rows among its constraints and the
/// coordinate hyperplanes.
pub fn feasible_by_vertices(rows: &[Row], n: usize) -> Option<Vec<Q>> {
    let margin = Q::new(BigInt::one(), BigInt::from(1u64 << 24));
    let closed: Vec<Row> = rows
        .iter()
        .map(|r| match r.strict {
            Some(true) => Row { coeffs: r.coeffs.clone(), constant: &r.constant - &margin, strict: Some(false) },
            _ => r.clone(),
        })
        .collect();
    let mut hyper: Vec<(Vec<Q>, Q)> = closed.iter().map(|r| (r.coeffs.clone(), -r.constant.clone())).collect();
    for j in 0..n {
        hyper.push(((0..n).map(|i| if i == j { Q::one() } else { Q::zero() }).collect(), Q::zero()));
    }
    for s in subsets(hyper.len(), n) {
        let a: Vec<Vec<Q>> = s.iter().map(|&i| hyper[i].0.clone()).collect();
        let b: Vec<Q> = s.iter().map(|&i| hyper[i].1.clone()).collect();
        if let Some(x) = solve_square(&a, &b) {
            if closed.iter().all(|r| r.holds(&x)) {
                debug_assert!(rows.iter().all(|r| r.holds(&x)));
                return Some(x);
            }
        }
    }
    None
}

// ------------------------------------------------------------- valuations

/// Valuation key of a point read off its own cut profile; `None` for span members.
pub fn key_of_point(amb: &Ambient, x: &GroupElement, d: &SpanHandle, level: u8) -> Option<BlockKey> {
    if d.contains(x) {
        return None;
    }
    let p = cut_profile(amb, x, d).expect("profile");
    BlockKey::from_profile(&p, level)
}

/// Primitive integer vectors of height at most `h` with a positive leading entry.
pub fn primitive_combinations(n: usize, h: i64) -> Vec<Vec<i64>> {
    let side = (2 * h + 1) as usize;
    (0..side.pow(n as u32))
        .map(|i| decode(i, side as i64, n).into_iter().map(|x| x - h).collect::<Vec<i64>>())
        .filter(|v| {
            let lead = v.iter().find(|x| **x != 0);
            lead.is_some_and(|x| *x > 0) && v.iter().fold(0i64, |g, x| g.gcd(x)) == 1
        })
        .collect()
}

/// Separatedness by exhaustive search: no member in the span and no
/// combination of height at most `h` whose key falls below the largest key on
/// its support. Returns the offending combination.
pub fn separated_by_search(amb: &Ambient, cs: &[GroupElement], d: &SpanHandle, h: i64) -> [Result<(), Option<Vec<i64>>>; 3] {
    let n = cs.len();
    let member_keys: Vec<[Option<BlockKey>; 3]> =
        cs.iter().map(|c| [1, 2, 3].map(|l| key_of_point(amb, c, d, l))).collect();
    let mut out: [Result<(), Option<Vec<i64>>>; 3] = [Ok(()), Ok(()), Ok(())];
    if member_keys.iter().any(|k| k[0].is_none()) {
        return [Err(None), Err(None), Err(None)];
    }
    for lam in primitive_combinations(n, h) {
        let coeffs: Vec<Q> = lam.iter().map(|x| q(*x)).collect();
        let x = combination(&coeffs, cs, amb.dim());
        let prof = if d.contains(&x) { None } else { Some(cut_profile(amb, &x, d).expect("profile")) };
        for (li, level) in [1u8, 2, 3].into_iter().enumerate() {
            if out[li].is_err() {
                continue;
            }
            let k = prof.as_ref().and_then(|p| BlockKey::from_profile(p, level));
            let top = (0..n).filter(|&i| lam[i] != 0).map(|i| member_keys[i][li]).max().flatten();
            if k < top {
                out[li] = Err(Some(lam.clone()));
            }
        }
        if out.iter().all(|r| r.is_err()) {
            break;
        }
    }
    out
}

/// Whether the rational combination `lam` of `cs` drops below the largest key over its support.
pub fn is_drop(amb: &Ambient, cs: &[GroupElement], d: &SpanHandle, lam: &[Q], level: u8) -> bool {
    let x = combination(lam, cs, amb.dim());
    let k = if d.contains(&x) { None } else { key_of_point(amb, &x, d, level) };
    let top = (0..cs.len()).filter(|&i| !lam[i].is_zero()).map(|i| key_of_point(amb, &cs[i], d, level)).max().flatten();
    k < top
}
