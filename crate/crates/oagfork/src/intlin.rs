//! Integer matrices: Hermite and Smith normal forms, kernels, saturation.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

pub type IVec = Vec<BigInt>;
/// Row-major integer matrix.
pub type IMat = Vec<IVec>;

pub fn ivec(v: &[i64]) -> IVec {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

pub fn identity(n: usize) -> IMat {
    (0..n).map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect()).collect()
}

/// Matrix whose columns are the given vectors of length `m`.
pub fn from_columns(cols: &[IVec], m: usize) -> IMat {
    (0..m).map(|i| cols.iter().map(|c| c[i].clone()).collect()).collect()
}

pub fn mat_vec(a: &IMat, x: &[BigInt]) -> IVec {
    a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

/// Smith normal form `u * a * v = diag(d)` with `d_i | d_{i+1}`, all `d_i > 0`.
#[derive(Clone, Debug)]
pub struct Snf {
    pub rows: usize,
    pub cols: usize,
    /// Nonzero invariant factors; their count is the rank.
    pub diag: Vec<BigInt>,
    pub u: IMat,
    pub uinv: IMat,
    pub v: IMat,
}

pub fn snf(a: &IMat, rows: usize, cols: usize) -> Snf {
    let mut d = a.clone();
    let mut u = identity(rows);
    let mut uinv = identity(rows);
    let mut v = identity(cols);

    let row_swap = |d: &mut IMat, u: &mut IMat, uinv: &mut IMat, i: usize, j: usize| {
        d.swap(i, j);
        u.swap(i, j);
        for r in uinv.iter_mut() {
            r.swap(i, j);
        }
    };
    // row_i += q * row_j
    let row_add = |d: &mut IMat, u: &mut IMat, uinv: &mut IMat, i: usize, j: usize, q: &BigInt| {
        if q.is_zero() {
            return;
        }
        let rj = d[j].clone();
        for (x, y) in d[i].iter_mut().zip(&rj) {
            *x += q * y;
        }
        let uj = u[j].clone();
        for (x, y) in u[i].iter_mut().zip(&uj) {
            *x += q * y;
        }
        for r in uinv.iter_mut() {
            let t = q * &r[i];
            r[j] -= t;
        }
    };
    let col_swap = |d: &mut IMat, v: &mut IMat, i: usize, j: usize| {
        for r in d.iter_mut() {
            r.swap(i, j);
        }
        for r in v.iter_mut() {
            r.swap(i, j);
        }
    };
    // col_i += q * col_j
    let col_add = |d: &mut IMat, v: &mut IMat, i: usize, j: usize, q: &BigInt| {
        if q.is_zero() {
            return;
        }
        for r in d.iter_mut() {
            let t = q * &r[j];
            r[i] += t;
        }
        for r in v.iter_mut() {
            let t = q * &r[j];
            r[i] += t;
        }
    };

    let mut diag = Vec::new();
    for t in 0..rows.min(cols) {
        loop {
            // smallest nonzero entry of the remaining block
            let mut best: Option<(usize, usize)> = None;
            for i in t..rows {
                for j in t..cols {
                    if !d[i][j].is_zero() && best.map_or(true, |(bi, bj)| d[i][j].abs() < d[bi][bj].abs()) {
                        best = Some((i, j));
                    }
                }
            }
            let Some((bi, bj)) = best else { break };
            if bi != t {
                row_swap(&mut d, &mut u, &mut uinv, t, bi);
            }
            if bj != t {
                col_swap(&mut d, &mut v, t, bj);
            }
            let mut clean = true;
            for i in t + 1..rows {
                if !d[i][t].is_zero() {
                    let q = -d[i][t].div_floor(&d[t][t]);
                    row_add(&mut d, &mut u, &mut uinv, i, t, &q);
                    clean &= d[i][t].is_zero();
                }
            }
            for j in t + 1..cols {
                if !d[t][j].is_zero() {
                    let q = -d[t][j].div_floor(&d[t][t]);
                    col_add(&mut d, &mut v, j, t, &q);
                    clean &= d[t][j].is_zero();
                }
            }
            if !clean {
                continue;
            }
            let p = d[t][t].clone();
            let bad = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| !d[i][j].is_multiple_of(&p)));
            match bad {
                Some(i) => row_add(&mut d, &mut u, &mut uinv, t, i, &BigInt::one()),
                None => break,
            }
        }
        if d[t][t].is_zero() {
            break;
        }
        if d[t][t].is_negative() {
            for x in d[t].iter_mut() {
                *x = -&*x;
            }
            for x in u[t].iter_mut() {
                *x = -&*x;
            }
            for r in uinv.iter_mut() {
                r[t] = -&r[t];
            }
        }
        diag.push(d[t][t].clone());
    }
    Snf { rows, cols, diag, u, uinv, v }
}

/// Basis (as columns) of `{x : a x = 0}` over the integers.
pub fn integer_kernel(a: &IMat, rows: usize, cols: usize) -> Vec<IVec> {
    let s = snf(a, rows, cols);
    (s.diag.len()..cols).map(|j| s.v.iter().map(|r| r[j].clone()).collect()).collect()
}

/// Row-style Hermite normal form of the lattice spanned by `gens` (vectors of length `m`):
/// echelon rows with positive pivots and entries above each pivot reduced modulo it.
pub fn hnf(gens: &[IVec], m: usize) -> IMat {
    let mut rows: IMat = gens.iter().filter(|g| g.iter().any(|x| !x.is_zero())).cloned().collect();
    let mut out: IMat = Vec::new();
    let mut pivots = Vec::new();
    for col in 0..m {
        // gcd-combine all remaining rows on this column into one
        loop {
            let nz: Vec<usize> = (0..rows.len()).filter(|&i| !rows[i][col].is_zero()).collect();
            if nz.len() <= 1 {
                break;
            }
            let (mut bi, mut bv) = (nz[0], rows[nz[0]][col].abs());
            for &i in &nz {
                if rows[i][col].abs() < bv {
                    bi = i;
                    bv = rows[i][col].abs();
                }
            }
            let piv = rows[bi].clone();
            for &i in &nz {
                if i != bi {
                    let q = rows[i][col].div_floor(&piv[col]);
                    for (x, y) in rows[i].iter_mut().zip(&piv) {
                        *x -= &q * y;
                    }
                }
            }
        }
        if let Some(i) = rows.iter().position(|r| !r[col].is_zero()) {
            let mut r = rows.remove(i);
            if r[col].is_negative() {
                for x in r.iter_mut() {
                    *x = -&*x;
                }
            }
            out.push(r);
            pivots.push(col);
        }
        rows.retain(|r| r.iter().any(|x| !x.is_zero()));
    }
    for k in 0..out.len() {
        let p = pivots[k];
        let piv = out[k].clone();
        for i in 0..k {
            let q = out[i][p].div_floor(&piv[p]);
            if !q.is_zero() {
                for (x, y) in out[i].iter_mut().zip(&piv) {
                    *x -= &q * y;
                }
            }
        }
    }
    out
}

/// `(L (x) Q) cap Z^m` for the lattice spanned by `gens`, as HNF rows.
pub fn saturate(gens: &[IVec], m: usize) -> IMat {
    if gens.is_empty() {
        return Vec::new();
    }
    let s = snf(&from_columns(gens, m), m, gens.len());
    let cols: Vec<IVec> = (0..s.diag.len()).map(|j| s.uinv.iter().map(|r| r[j].clone()).collect()).collect();
    hnf(&cols, m)
}

/// Exponent of the prime `l` in `x` (nonzero).
pub fn valuation(x: &BigInt, l: u64) -> u32 {
    let l = BigInt::from(l);
    let mut x = x.abs();
    let mut v = 0;
    while !x.is_zero() && x.is_multiple_of(&l) {
        x /= &l;
        v += 1;
    }
    v
}
