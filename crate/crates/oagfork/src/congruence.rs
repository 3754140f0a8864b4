//! Congruence conditions modulo powers of a prime.
//!
//! For each prime `l` the quotients `M / l^N M` are modelled through integer
//! residue vectors in `Z^m`: an element `x` lies in `S + l^N M` exactly when its
//! residue lies in `res(S) + l^N Z^m`. Subgroups closed under division within
//! the group are represented by saturated lattices.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Pow, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{OagError, Result};
use crate::intlin::{self, IMat, IVec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimeKind {
    /// `M = l M`: no congruence information.
    Divisible,
    /// `M / l M` is finite of the declared rank.
    FiniteIndex,
    /// `M / l M` is infinite; residues use finitely many declared coordinates.
    InfiniteIndex,
}

/// A sublattice of `Z^m` in Hermite normal form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegerLattice {
    pub m: usize,
    pub basis: IMat,
}

impl IntegerLattice {
    pub fn new(gens: &[IVec], m: usize) -> Self {
        IntegerLattice { m, basis: intlin::hnf(gens, m) }
    }

    pub fn saturated(gens: &[IVec], m: usize) -> Self {
        IntegerLattice { m, basis: intlin::saturate(gens, m) }
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    fn snf(&self) -> intlin::Snf {
        if self.basis.is_empty() {
            return intlin::Snf {
                rows: self.m,
                cols: 0,
                diag: Vec::new(),
                u: intlin::identity(self.m),
                uinv: intlin::identity(self.m),
                v: Vec::new(),
            };
        }
        intlin::snf(&intlin::from_columns(&self.basis, self.m), self.m, self.basis.len())
    }

    /// Membership test in `L + l^n Z^m`.
    pub fn contains_mod(&self, z: &[BigInt], l: u64, n: u32) -> bool {
        Modulus::new(self).contains(z, &lpow(l, n))
    }
}

/// Precomputed Smith form of a lattice for repeated membership tests.
struct Modulus {
    diag: Vec<BigInt>,
    u: IMat,
    m: usize,
}

impl Modulus {
    fn new(lat: &IntegerLattice) -> Self {
        let s = lat.snf();
        Modulus { diag: s.diag, u: s.u, m: lat.m }
    }

    fn contains(&self, z: &[BigInt], q: &BigInt) -> bool {
        let w = intlin::mat_vec(&self.u, z);
        (0..self.m).all(|i| {
            let g = match self.diag.get(i) {
                Some(d) => d.gcd(q),
                None => q.clone(),
            };
            w[i].is_multiple_of(&g)
        })
    }
}

pub fn lpow(l: u64, n: u32) -> BigInt {
    Pow::pow(BigInt::from(l), n)
}

/// Relative divisible closure of the generators together with the unit residue, if any.
pub fn saturate_special(gens: &[IVec], unit: Option<&IVec>, m: usize) -> IntegerLattice {
    let mut all = gens.to_vec();
    if let Some(u) = unit {
        all.push(u.clone());
    }
    IntegerLattice::saturated(&all, m)
}

/// Outcome of a congruence condition; the witness is a coefficient vector over
/// the tuple together with the exponent at which the condition fails.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CongruenceCheck {
    pub holds: bool,
    pub witness: Option<(IVec, u32)>,
    pub bound: u32,
}

/// Exponent beyond which membership questions among the given lattices no
/// longer change: one more than the largest `l`-adic valuation of an invariant
/// factor of each listed generator family.
pub fn stabilization_bound(l: u64, families: &[Vec<IVec>], m: usize) -> u32 {
    let mut best = 0;
    for fam in families {
        let fam: Vec<IVec> = fam.iter().filter(|v| v.iter().any(|x| !x.is_zero())).cloned().collect();
        if fam.is_empty() {
            continue;
        }
        let s = intlin::snf(&intlin::from_columns(&fam, m), m, fam.len());
        for d in &s.diag {
            best = best.max(intlin::valuation(d, l));
        }
    }
    best + 1
}

fn concat(parts: &[&[IVec]]) -> Vec<IVec> {
    parts.iter().flat_map(|p| p.iter().cloned()).collect()
}

/// The bound used for the tuple conditions over the spans `lower <= upper`.
pub fn tuple_bound(l: u64, c: &[IVec], lower: &IntegerLattice, upper: &IntegerLattice, m: usize) -> u32 {
    let a = &lower.basis[..];
    let b = &upper.basis[..];
    let mut fams = vec![a.to_vec(), b.to_vec(), c.to_vec(), concat(&[a, c]), concat(&[b, c]), concat(&[a, b]), concat(&[a, b, c])];
    for col in c {
        fams.push(concat(&[a, std::slice::from_ref(col)]));
        fams.push(concat(&[b, std::slice::from_ref(col)]));
    }
    stabilization_bound(l, &fams, m)
}

fn check_dims(c: &[IVec], m: usize) -> Result<()> {
    if c.iter().any(|v| v.len() != m) {
        return Err(OagError::config(format!("residue vectors must have {m} coordinates")));
    }
    Ok(())
}

/// For every `n <= bound`: each integer combination of the tuple lying in
/// `upper + l^n M` also lies in `lower + l^n M`.
pub fn infinite_index_condition(
    c: &[IVec],
    lower: &IntegerLattice,
    upper: &IntegerLattice,
    l: u64,
    bound: u32,
) -> Result<CongruenceCheck> {
    let m = lower.m;
    check_dims(c, m)?;
    let k = c.len();
    let lower_mod = Modulus::new(lower);
    for n in 1..=bound {
        let q = lpow(l, n);
        // kernel of [C | -B | -q I]
        let cols = k + upper.rank() + m;
        let mat: IMat = (0..m)
            .map(|i| {
                let mut row: IVec = c.iter().map(|v| v[i].clone()).collect();
                row.extend(upper.basis.iter().map(|b| -&b[i]));
                row.extend((0..m).map(|j| if i == j { -&q } else { BigInt::zero() }));
                row
            })
            .collect();
        for ker in intlin::integer_kernel(&mat, m, cols) {
            let u: IVec = ker[..k].to_vec();
            let z = combine(c, &u, m);
            if !lower_mod.contains(&z, &q) {
                return Ok(CongruenceCheck { holds: false, witness: Some((u, n)), bound });
            }
        }
    }
    Ok(CongruenceCheck { holds: true, witness: None, bound })
}

/// For every `n <= bound`: every element of the tuple lies in `lower + l^n M`.
pub fn finite_index_condition(c: &[IVec], lower: &IntegerLattice, l: u64, bound: u32) -> Result<CongruenceCheck> {
    let m = lower.m;
    check_dims(c, m)?;
    let lower_mod = Modulus::new(lower);
    for n in 1..=bound {
        let q = lpow(l, n);
        for (i, z) in c.iter().enumerate() {
            if !lower_mod.contains(z, &q) {
                let mut u = vec![BigInt::zero(); c.len()];
                u[i] = BigInt::one();
                return Ok(CongruenceCheck { holds: false, witness: Some((u, n)), bound });
            }
        }
    }
    Ok(CongruenceCheck { holds: true, witness: None, bound })
}

/// Exact form of the finite-index condition: `z` lies in `lower + l^n Z^m` for
/// all `n` iff some multiple `k z` with `k` prime to `l` lies in `lower`.
pub fn in_all_levels(z: &[BigInt], lower: &IntegerLattice, l: u64) -> bool {
    let s = lower.snf();
    let w = intlin::mat_vec(&s.u, z);
    (0..lower.m).all(|i| match s.diag.get(i) {
        // the l-part of the invariant factor must divide the coordinate
        Some(d) => w[i].is_zero() || intlin::valuation(&w[i], l) >= intlin::valuation(d, l),
        None => w[i].is_zero(),
    })
}

pub fn combine(c: &[IVec], u: &[BigInt], m: usize) -> IVec {
    let mut z = vec![BigInt::zero(); m];
    for (v, k) in c.iter().zip(u) {
        for (zi, vi) in z.iter_mut().zip(v) {
            *zi += k * vi;
        }
    }
    z
}

/// Equality of the congruence parts of the types of `x` and `y` over `s`:
/// for all `n <= bound` and `j < n`, `l^j x` and `l^j y` either both avoid
/// `s + l^n M`, or `l^j (x - y)` lies in `l^n M` and both lie in it.
pub fn ltype_equal(x: &[BigInt], y: &[BigInt], s: &IntegerLattice, l: u64, bound: u32) -> Result<bool> {
    let m = s.m;
    check_dims(&[x.to_vec(), y.to_vec()], m)?;
    let md = Modulus::new(s);
    let diff: IVec = x.iter().zip(y).map(|(a, b)| a - b).collect();
    for n in 1..=bound {
        let q = lpow(l, n);
        for j in 0..n {
            let f = lpow(l, j);
            let xj: IVec = x.iter().map(|v| v * &f).collect();
            let yj: IVec = y.iter().map(|v| v * &f).collect();
            let xin = md.contains(&xj, &q);
            let yin = md.contains(&yj, &q);
            let same_coset = diff.iter().all(|d| (d * &f).is_multiple_of(&q));
            let ok = (!xin && !yin) || (same_coset && xin && yin);
            if !ok {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Bound for [`ltype_equal`]. The coset clause `l^j (x - y) in l^n M` can
/// first fail once `n` exceeds the `l`-adic valuation of `x - y` by the
/// exponent at which `l^j x` enters the span, hence the added valuation.
pub fn unary_bound(l: u64, x: &[BigInt], y: &[BigInt], s: &IntegerLattice) -> u32 {
    let m = s.m;
    let b = &s.basis;
    let diff: IVec = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let mut fams = vec![b.clone()];
    for v in [x.to_vec(), y.to_vec(), diff.clone()] {
        let mut f = b.clone();
        f.push(v.clone());
        fams.push(f);
        fams.push(vec![v]);
    }
    let content = diff.iter().filter(|d| !d.is_zero()).map(|d| intlin::valuation(d, l)).min().unwrap_or(0);
    stabilization_bound(l, &fams, m) + content
}

/// Chinese remaindering of `x = r (mod l^n)` targets into a least nonnegative residue.
pub fn crt_realize(targets: &[(u64, u32, BigInt)]) -> Result<BigInt> {
    let mut x = BigInt::zero();
    let mut modulus = BigInt::one();
    for (l, n, r) in targets {
        let q = lpow(*l, *n);
        // solve x + modulus * t = r (mod q)
        let g = modulus.extended_gcd(&q);
        let diff = r - &x;
        if !diff.is_multiple_of(&g.gcd) {
            return Err(OagError::config(format!("contradictory residues modulo {l}^{n}")));
        }
        let t = ((&diff / &g.gcd) * &g.x).mod_floor(&(&q / &g.gcd));
        x += &modulus * t;
        modulus = modulus.lcm(&q);
        x = x.mod_floor(&modulus);
    }
    Ok(x)
}

/// Coordinate-wise [`crt_realize`].
pub fn crt_realize_vec(targets: &[(u64, u32, IVec)]) -> Result<IVec> {
    let m = targets.first().map_or(0, |t| t.2.len());
    (0..m)
        .map(|i| crt_realize(&targets.iter().map(|(l, n, v)| (*l, *n, v[i].clone())).collect::<Vec<_>>()))
        .collect()
}

pub fn is_prime(l: u64) -> bool {
    l >= 2 && (2..).take_while(|d| d * d <= l).all(|d| l % d != 0)
}

pub fn reduce_mod(z: &[BigInt], q: &BigInt) -> IVec {
    z.iter().map(|x| x.mod_floor(q)).collect()
}
