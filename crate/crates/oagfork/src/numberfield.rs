//! Real number fields `Q(theta)` with a designated real embedding.
//!
//! A field is given by a monic squarefree polynomial (constant term first) and
//! a rational interval isolating the chosen real root. Sign determination is
//! exact: interval evaluation settles most elements, a gcd with the defining
//! polynomial detects exact zeros, and bisection handles the rest.

use std::cmp::Ordering;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{OagError, Result};
use crate::rational::{fmt_q, Q};

/// Bisection steps performed once at construction to tighten the isolating interval.
const PREREFINE_STEPS: usize = 64;
/// Upper bound on bisection steps for one sign query.
const MAX_REFINE_STEPS: usize = 20_000;

pub type Poly = Vec<Q>;

fn trim(p: &mut Poly) {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
}

fn trimmed(mut p: Poly) -> Poly {
    trim(&mut p);
    p
}

pub fn poly_eval(p: &[Q], x: &Q) -> Q {
    let mut acc = Q::zero();
    for c in p.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

pub fn poly_mul(a: &[Q], b: &[Q]) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Q::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trimmed(out)
}

pub fn poly_sub(a: &[Q], b: &[Q]) -> Poly {
    let n = a.len().max(b.len());
    let out = (0..n)
        .map(|i| a.get(i).cloned().unwrap_or_default() - b.get(i).cloned().unwrap_or_default())
        .collect();
    trimmed(out)
}

pub fn poly_add(a: &[Q], b: &[Q]) -> Poly {
    let n = a.len().max(b.len());
    let out = (0..n)
        .map(|i| a.get(i).cloned().unwrap_or_default() + b.get(i).cloned().unwrap_or_default())
        .collect();
    trimmed(out)
}

/// Remainder of `a` modulo nonzero `b`.
pub fn poly_rem(a: &[Q], b: &[Q]) -> Poly {
    let mut r = trimmed(a.to_vec());
    let b = trimmed(b.to_vec());
    assert!(!b.is_empty(), "division by the zero polynomial");
    let lead = b.last().unwrap().clone();
    while r.len() >= b.len() {
        let shift = r.len() - b.len();
        let f = r.last().unwrap() / &lead;
        for (i, c) in b.iter().enumerate() {
            r[shift + i] -= &f * c;
        }
        r.pop();
        trim(&mut r);
    }
    r
}

pub fn poly_derivative(p: &[Q]) -> Poly {
    trimmed(p.iter().enumerate().skip(1).map(|(i, c)| c * Q::from_integer((i as i64).into())).collect())
}

fn monic(p: Poly) -> Poly {
    match p.last() {
        None => p,
        Some(l) => {
            let l = l.clone();
            p.into_iter().map(|c| c / &l).collect()
        }
    }
}

/// Monic greatest common divisor; zero only if both inputs are zero.
pub fn poly_gcd(a: &[Q], b: &[Q]) -> Poly {
    let mut x = trimmed(a.to_vec());
    let mut y = trimmed(b.to_vec());
    while !y.is_empty() {
        let r = poly_rem(&x, &y);
        x = y;
        y = r;
    }
    monic(x)
}

fn sturm_chain(p: &[Q]) -> Vec<Poly> {
    let mut chain = vec![trimmed(p.to_vec())];
    let d = poly_derivative(p);
    if d.is_empty() {
        return chain;
    }
    chain.push(d);
    loop {
        let n = chain.len();
        let r = poly_rem(&chain[n - 2], &chain[n - 1]);
        if r.is_empty() {
            break;
        }
        chain.push(r.into_iter().map(|c| -c).collect());
    }
    chain
}

fn sign_changes(chain: &[Poly], x: &Q) -> usize {
    let signs: Vec<bool> = chain
        .iter()
        .map(|p| poly_eval(p, x))
        .filter(|v| !v.is_zero())
        .map(|v| v.is_positive())
        .collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Number of distinct real roots of `p` in the half-open interval `(lo, hi]`.
pub fn count_roots(p: &[Q], lo: &Q, hi: &Q) -> usize {
    let chain = sturm_chain(p);
    sign_changes(&chain, lo).saturating_sub(sign_changes(&chain, hi))
}

fn imul(a: &(Q, Q), b: &(Q, Q)) -> (Q, Q) {
    let ps = [&a.0 * &b.0, &a.0 * &b.1, &a.1 * &b.0, &a.1 * &b.1];
    let lo = ps.iter().min().unwrap().clone();
    let hi = ps.iter().max().unwrap().clone();
    (lo, hi)
}

/// Interval Horner evaluation of `p` over `[lo, hi]`.
fn ieval(p: &[Q], lo: &Q, hi: &Q) -> (Q, Q) {
    let mut acc = (Q::zero(), Q::zero());
    let x = (lo.clone(), hi.clone());
    for c in p.iter().rev() {
        let m = imul(&acc, &x);
        acc = (m.0 + c, m.1 + c);
    }
    acc
}

/// An element of the field, as a polynomial in the generator of degree below the field degree.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct FieldElement {
    coeffs: Poly,
}

impl FieldElement {
    pub fn zero() -> Self {
        FieldElement { coeffs: Vec::new() }
    }

    pub fn rational(x: Q) -> Self {
        FieldElement { coeffs: trimmed(vec![x]) }
    }

    pub fn one() -> Self {
        Self::rational(Q::one())
    }

    /// Raw coefficients, constant first. Not reduced modulo the defining polynomial.
    pub fn from_coeffs(coeffs: Vec<Q>) -> Self {
        FieldElement { coeffs: trimmed(coeffs) }
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn as_rational(&self) -> Option<Q> {
        match self.coeffs.len() {
            0 => Some(Q::zero()),
            1 => Some(self.coeffs[0].clone()),
            _ => None,
        }
    }

    pub fn add(&self, o: &FieldElement) -> FieldElement {
        FieldElement { coeffs: poly_add(&self.coeffs, &o.coeffs) }
    }

    pub fn sub(&self, o: &FieldElement) -> FieldElement {
        FieldElement { coeffs: poly_sub(&self.coeffs, &o.coeffs) }
    }

    pub fn neg(&self) -> FieldElement {
        FieldElement { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }

    pub fn scale(&self, k: &Q) -> FieldElement {
        if k.is_zero() {
            return FieldElement::zero();
        }
        FieldElement { coeffs: self.coeffs.iter().map(|c| c * k).collect() }
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| match i {
                0 => fmt_q(c),
                1 => format!("{}*t", fmt_q(c)),
                _ => format!("{}*t^{}", fmt_q(c), i),
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// A real number field with an isolated embedding.
#[derive(Clone, Debug)]
pub struct FieldSpec {
    minpoly: Poly,
    interval: (Q, Q),
    iso: (Q, Q),
}

impl PartialEq for FieldSpec {
    fn eq(&self, o: &Self) -> bool {
        self.minpoly == o.minpoly && self.interval == o.interval
    }
}

impl FieldSpec {
    /// Validates the defining polynomial and isolating interval.
    pub fn new(minpoly: Vec<Q>, lo: Q, hi: Q) -> Result<FieldSpec> {
        let p = trimmed(minpoly);
        if p.len() < 2 {
            return Err(OagError::config("defining polynomial must have degree at least 1"));
        }
        let p = monic(p);
        if lo >= hi {
            return Err(OagError::config("isolating interval must satisfy lo < hi"));
        }
        if poly_gcd(&p, &poly_derivative(&p)).len() > 1 {
            return Err(OagError::config("defining polynomial is not squarefree"));
        }
        let (plo, phi) = (poly_eval(&p, &lo), poly_eval(&p, &hi));
        if plo.is_zero() || phi.is_zero() {
            return Err(OagError::config("an interval endpoint is a root of the defining polynomial"));
        }
        if plo.is_positive() == phi.is_positive() {
            return Err(OagError::config("defining polynomial has no sign change on the interval"));
        }
        let roots = count_roots(&p, &lo, &hi);
        if roots != 1 {
            return Err(OagError::config(format!("interval contains {roots} roots, expected exactly one")));
        }
        let mut spec = FieldSpec { minpoly: p, interval: (lo.clone(), hi.clone()), iso: (lo, hi) };
        let (mut a, mut b) = spec.iso.clone();
        for _ in 0..PREREFINE_STEPS {
            if a == b {
                break;
            }
            spec.bisect(&mut a, &mut b);
        }
        spec.iso = (a, b);
        Ok(spec)
    }

    /// The field of rationals, embedded as `Q(0)`.
    pub fn rationals() -> FieldSpec {
        FieldSpec::new(vec![Q::zero(), Q::one()], -Q::one(), Q::one()).expect("valid")
    }

    pub fn minpoly(&self) -> &[Q] {
        &self.minpoly
    }

    pub fn interval(&self) -> (&Q, &Q) {
        (&self.interval.0, &self.interval.1)
    }

    pub fn degree(&self) -> usize {
        self.minpoly.len() - 1
    }

    /// Reduces raw coefficients modulo the defining polynomial.
    pub fn element(&self, coeffs: Vec<Q>) -> FieldElement {
        FieldElement { coeffs: poly_rem(&coeffs, &self.minpoly) }
    }

    pub fn generator(&self) -> FieldElement {
        self.element(vec![Q::zero(), Q::one()])
    }

    pub fn mul(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        FieldElement { coeffs: poly_rem(&poly_mul(&a.coeffs, &b.coeffs), &self.minpoly) }
    }

    /// Halves `[a, b]` around the root; collapses to a point if the midpoint is the root.
    fn bisect(&self, a: &mut Q, b: &mut Q) {
        let mid = (&*a + &*b) / Q::from_integer(2.into());
        let pm = poly_eval(&self.minpoly, &mid);
        if pm.is_zero() {
            *a = mid.clone();
            *b = mid;
            return;
        }
        let pa = poly_eval(&self.minpoly, a);
        if pa.is_positive() == pm.is_positive() {
            *a = mid;
        } else {
            *b = mid;
        }
    }

    /// Exact sign of the element under the chosen embedding.
    pub fn sign(&self, e: &FieldElement) -> Result<Ordering> {
        if let Some(r) = e.as_rational() {
            return Ok(r.cmp(&Q::zero()));
        }
        let (mut a, mut b) = self.iso.clone();
        if let Some(s) = self.conclusive(&e.coeffs, &a, &b) {
            return Ok(s);
        }
        let g = poly_gcd(&e.coeffs, &self.minpoly);
        if g.len() > 1 && count_roots(&g, &a, &b) > 0 {
            return Ok(Ordering::Equal);
        }
        for _ in 0..MAX_REFINE_STEPS {
            self.bisect(&mut a, &mut b);
            if let Some(s) = self.conclusive(&e.coeffs, &a, &b) {
                return Ok(s);
            }
        }
        Err(OagError::Precision(format!(
            "sign of {e} undecided after {MAX_REFINE_STEPS} refinements (interval [{}, {}])",
            fmt_q(&a),
            fmt_q(&b)
        )))
    }

    fn conclusive(&self, p: &[Q], a: &Q, b: &Q) -> Option<Ordering> {
        if a == b {
            return Some(poly_eval(p, a).cmp(&Q::zero()));
        }
        let (lo, hi) = ieval(p, a, b);
        if lo.is_positive() {
            Some(Ordering::Greater)
        } else if hi.is_negative() {
            Some(Ordering::Less)
        } else {
            None
        }
    }

    pub fn is_zero(&self, e: &FieldElement) -> Result<bool> {
        Ok(self.sign(e)? == Ordering::Equal)
    }

    pub fn cmp(&self, a: &FieldElement, b: &FieldElement) -> Result<Ordering> {
        self.sign(&a.sub(b))
    }

    /// A rational interval of width at most `width` containing the element's value.
    pub fn enclose(&self, e: &FieldElement, width: &Q) -> Result<(Q, Q)> {
        if let Some(r) = e.as_rational() {
            return Ok((r.clone(), r));
        }
        let (mut a, mut b) = self.iso.clone();
        for _ in 0..MAX_REFINE_STEPS {
            if a == b {
                let v = poly_eval(&e.coeffs, &a);
                return Ok((v.clone(), v));
            }
            let (lo, hi) = ieval(&e.coeffs, &a, &b);
            if &(&hi - &lo) <= width {
                return Ok((lo, hi));
            }
            self.bisect(&mut a, &mut b);
        }
        Err(OagError::Precision(format!("could not enclose {e} to the requested width")))
    }

    /// Approximate value, for display only.
    pub fn approx(&self, e: &FieldElement) -> f64 {
        use num_traits::ToPrimitive;
        let w = Q::new(1.into(), num_bigint::BigInt::from(1u64 << 50));
        match self.enclose(e, &w) {
            Ok((lo, hi)) => ((lo + hi) / Q::from_integer(2.into())).to_f64().unwrap_or(f64::NAN),
            Err(_) => f64::NAN,
        }
    }
}
