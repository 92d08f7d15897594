//! A minimal commutative-ring-with-involution interface and dense square
//! matrices over it.
//!
//! Everything downstream (quadratic matrices, words, polynomial gluing) is
//! written against [`Ring`], so the same generator formulas evaluate over a
//! finite base ring or over its polynomial extensions.

use std::fmt::Debug;
use std::hash::Hash;

pub trait Ring {
    type El: Clone + PartialEq + Eq + Hash + Debug;

    fn zero(&self) -> Self::El;
    fn one(&self) -> Self::El;
    fn add(&self, a: &Self::El, b: &Self::El) -> Self::El;
    fn neg(&self, a: &Self::El) -> Self::El;
    fn mul(&self, a: &Self::El, b: &Self::El) -> Self::El;
    fn conj(&self, a: &Self::El) -> Self::El;
    /// The central unit lambda of the form ring.
    fn lambda(&self) -> Self::El;

    fn sub(&self, a: &Self::El, b: &Self::El) -> Self::El {
        self.add(a, &self.neg(b))
    }

    fn is_zero(&self, a: &Self::El) -> bool {
        *a == self.zero()
    }

    fn lambda_bar(&self) -> Self::El {
        self.conj(&self.lambda())
    }
}

/// Dense square matrix, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mat<E> {
    pub dim: usize,
    pub entries: Vec<E>,
}

impl<E: Clone> Mat<E> {
    pub fn from_rows(rows: Vec<Vec<E>>) -> Self {
        let dim = rows.len();
        let entries: Vec<E> = rows.into_iter().flatten().collect();
        assert_eq!(entries.len(), dim * dim, "matrix must be square");
        Mat { dim, entries }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> &E {
        &self.entries[r * self.dim + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: E) {
        self.entries[r * self.dim + c] = v;
    }

    pub fn rows(&self) -> Vec<Vec<E>> {
        self.entries.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn column(&self, c: usize) -> Vec<E> {
        (0..self.dim).map(|r| self.get(r, c).clone()).collect()
    }

    pub fn map<F, T>(&self, f: F) -> Mat<T>
    where
        F: Fn(&E) -> T,
    {
        Mat { dim: self.dim, entries: self.entries.iter().map(f).collect() }
    }
}

pub fn identity<R: Ring>(ring: &R, dim: usize) -> Mat<R::El> {
    let mut entries = vec![ring.zero(); dim * dim];
    for i in 0..dim {
        entries[i * dim + i] = ring.one();
    }
    Mat { dim, entries }
}

pub fn zero_mat<R: Ring>(ring: &R, dim: usize) -> Mat<R::El> {
    Mat { dim, entries: vec![ring.zero(); dim * dim] }
}

pub fn mat_mul<R: Ring>(ring: &R, a: &Mat<R::El>, b: &Mat<R::El>) -> Mat<R::El> {
    assert_eq!(a.dim, b.dim);
    let n = a.dim;
    let mut out = zero_mat(ring, n);
    for i in 0..n {
        for k in 0..n {
            let aik = a.get(i, k);
            if ring.is_zero(aik) {
                continue;
            }
            for j in 0..n {
                let bkj = b.get(k, j);
                if ring.is_zero(bkj) {
                    continue;
                }
                let cur = out.get(i, j).clone();
                out.set(i, j, ring.add(&cur, &ring.mul(aik, bkj)));
            }
        }
    }
    out
}

pub fn mat_add<R: Ring>(ring: &R, a: &Mat<R::El>, b: &Mat<R::El>) -> Mat<R::El> {
    Mat { dim: a.dim, entries: a.entries.iter().zip(&b.entries).map(|(x, y)| ring.add(x, y)).collect() }
}

pub fn mat_sub<R: Ring>(ring: &R, a: &Mat<R::El>, b: &Mat<R::El>) -> Mat<R::El> {
    Mat { dim: a.dim, entries: a.entries.iter().zip(&b.entries).map(|(x, y)| ring.sub(x, y)).collect() }
}

/// Conjugate transpose.
pub fn conj_transpose<R: Ring>(ring: &R, a: &Mat<R::El>) -> Mat<R::El> {
    let n = a.dim;
    let mut out = zero_mat(ring, n);
    for i in 0..n {
        for j in 0..n {
            out.set(j, i, ring.conj(a.get(i, j)));
        }
    }
    out
}

pub fn mat_vec<R: Ring>(ring: &R, a: &Mat<R::El>, v: &[R::El]) -> Vec<R::El> {
    (0..a.dim)
        .map(|i| {
            let mut acc = ring.zero();
            for (j, vj) in v.iter().enumerate() {
                acc = ring.add(&acc, &ring.mul(a.get(i, j), vj));
            }
            acc
        })
        .collect()
}

pub fn is_identity<R: Ring>(ring: &R, a: &Mat<R::El>) -> bool {
    let one = ring.one();
    let zero = ring.zero();
    (0..a.dim).all(|i| (0..a.dim).all(|j| *a.get(i, j) == if i == j { one.clone() } else { zero.clone() }))
}
