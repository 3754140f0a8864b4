//! Dense linear algebra over the rationals.

use num_traits::{One, Zero};

use crate::rational::Q;

pub type Row = Vec<Q>;

pub fn zero_row(n: usize) -> Row {
    vec![Q::zero(); n]
}

pub fn unit_row(n: usize, i: usize) -> Row {
    let mut r = zero_row(n);
    r[i] = Q::one();
    r
}

pub fn is_zero_row(r: &[Q]) -> bool {
    r.iter().all(|x| x.is_zero())
}

pub fn axpy(y: &mut [Q], a: &Q, x: &[Q]) {
    if a.is_zero() {
        return;
    }
    for (yi, xi) in y.iter_mut().zip(x) {
        if !xi.is_zero() {
            *yi += a * xi;
        }
    }
}

pub fn scaled(x: &[Q], a: &Q) -> Row {
    x.iter().map(|v| v * a).collect()
}

/// Combination `sum coeffs[i] * vecs[i]`.
pub fn combine(coeffs: &[Q], vecs: &[Row], n: usize) -> Row {
    let mut out = zero_row(n);
    for (c, v) in coeffs.iter().zip(vecs) {
        axpy(&mut out, c, v);
    }
    out
}

/// Reduced row echelon form, pivots chosen among the first `width` columns.
/// Rows may carry extra trailing columns (for example provenance); those are
/// transformed along but never pivoted on.
#[derive(Clone, Debug)]
pub struct Rref {
    pub rows: Vec<Row>,
    pub pivots: Vec<usize>,
    pub width: usize,
}

impl Rref {
    pub fn new(input: &[Row], width: usize) -> Rref {
        let mut rows: Vec<Row> = input.to_vec();
        let mut pivots = Vec::new();
        let mut r = 0;
        for col in 0..width {
            let Some(p) = (r..rows.len()).find(|&i| !rows[i][col].is_zero()) else { continue };
            rows.swap(r, p);
            let inv = Q::one() / &rows[r][col];
            for x in rows[r].iter_mut() {
                *x *= &inv;
            }
            let pivot_row = rows[r].clone();
            for (i, row) in rows.iter_mut().enumerate() {
                if i != r && !row[col].is_zero() {
                    let f = -row[col].clone();
                    axpy(row, &f, &pivot_row);
                }
            }
            pivots.push(col);
            r += 1;
            if r == rows.len() {
                break;
            }
        }
        Rref { rows, pivots, width }
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn basis(&self) -> &[Row] {
        &self.rows[..self.pivots.len()]
    }

    /// Rows beyond the rank: zero in the pivot range, trailing columns hold relations.
    pub fn dependent_rows(&self) -> &[Row] {
        &self.rows[self.pivots.len()..]
    }

    /// Eliminates the pivot columns from `v`, returning the remainder.
    pub fn reduce(&self, v: &[Q]) -> Row {
        let mut out = v.to_vec();
        for (row, &p) in self.basis().iter().zip(&self.pivots) {
            if !out[p].is_zero() {
                let f = -out[p].clone();
                axpy(&mut out, &f, row);
            }
        }
        out
    }

    pub fn contains(&self, v: &[Q]) -> bool {
        is_zero_row(&self.reduce(v)[..self.width])
    }

    /// Coordinates of `v` in the echelon basis, if it lies in the row span.
    pub fn coordinates(&self, v: &[Q]) -> Option<Row> {
        if !self.contains(v) {
            return None;
        }
        Some(self.pivots.iter().map(|&p| v[p].clone()).collect())
    }
}

/// Right kernel `{x : M x = 0}` of the matrix with the given rows.
pub fn kernel(rows: &[Row], ncols: usize) -> Vec<Row> {
    let e = Rref::new(rows, ncols);
    let mut out = Vec::new();
    for f in 0..ncols {
        if e.pivots.contains(&f) {
            continue;
        }
        let mut x = unit_row(ncols, f);
        for (row, &p) in e.basis().iter().zip(&e.pivots) {
            x[p] = -row[f].clone();
        }
        out.push(x);
    }
    out
}

/// Linear relations among vectors: a basis of `{c : sum c_i v_i = 0}`.
pub fn relations(vecs: &[Row], n: usize) -> Vec<Row> {
    let m = vecs.len();
    let rows: Vec<Row> = (0..n).map(|j| vecs.iter().map(|v| v[j].clone()).collect()).collect();
    kernel(&rows, m)
}

/// A subspace of `Q^n` stored as a reduced echelon basis.
#[derive(Clone, Debug)]
pub struct Subspace {
    pub ech: Rref,
}

impl PartialEq for Subspace {
    fn eq(&self, other: &Self) -> bool {
        self.dim() == other.dim() && self.contains(other)
    }
}

impl Subspace {
    pub fn span(vecs: &[Row], n: usize) -> Subspace {
        let mut e = Rref::new(vecs, n);
        e.rows.truncate(e.pivots.len());
        Subspace { ech: e }
    }

    pub fn zero(n: usize) -> Subspace {
        Subspace::span(&[], n)
    }

    pub fn full(n: usize) -> Subspace {
        let vecs: Vec<Row> = (0..n).map(|i| unit_row(n, i)).collect();
        Subspace::span(&vecs, n)
    }

    pub fn ambient(&self) -> usize {
        self.ech.width
    }

    pub fn dim(&self) -> usize {
        self.ech.rank()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn basis(&self) -> &[Row] {
        self.ech.basis()
    }

    pub fn contains_vec(&self, v: &[Q]) -> bool {
        self.ech.contains(v)
    }

    pub fn contains(&self, other: &Subspace) -> bool {
        other.basis().iter().all(|v| self.contains_vec(v))
    }

    /// A basis vector of `self` outside `other`, if `self` is not contained in it.
    pub fn escape(&self, other: &Subspace) -> Option<Row> {
        self.basis().iter().find(|v| !other.contains_vec(v)).cloned()
    }

    pub fn intersect(&self, other: &Subspace) -> Subspace {
        let n = self.ambient();
        let a = self.basis();
        let b = other.basis();
        if a.is_empty() || b.is_empty() {
            return Subspace::zero(n);
        }
        let mut cols: Vec<Row> = a.to_vec();
        cols.extend(b.iter().map(|v| scaled(v, &-Q::one())));
        let rel = relations(&cols, n);
        let vecs: Vec<Row> = rel.iter().map(|c| combine(&c[..a.len()], a, n)).collect();
        Subspace::span(&vecs, n)
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        let mut v = self.basis().to_vec();
        v.extend_from_slice(other.basis());
        Subspace::span(&v, self.ambient())
    }
}
