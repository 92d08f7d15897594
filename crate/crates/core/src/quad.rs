//! The hyperbolic quadratic module of rank `2n`, its forms, the group
//! `GQ_{2n}(R, Lambda)`, elementary generators, transvections and the
//! stabilization embeddings.
//!
//! Coordinates are in block order: index `i` (0-based, `i < n`) is `e_{i+1}`
//! and index `n + i` is `e_{-(i+1)}`, so the pairing permutation is
//! `rho(i) = n + i` and `psi_n = [[0, lambda I], [I, 0]]` is the Gram matrix
//! of `h`. [`to_display_order`] converts to the ordering
//! `e_1, ..., e_n, e_{-n}, ..., e_{-1}` used when printing block patterns.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::algebra::{conj_transpose, identity, mat_mul, zero_mat, Mat, Ring};
use crate::error::{Error, Result};
use crate::form_param::{in_lambda_max, poly_param_contains, FormParam, LambdaCoset};
use crate::poly::Poly;
use crate::ring::{label_text, Elem, Ideal, RingCtx};

pub const MAX_N: usize = 8;

/// Which diagonal long-root parameters are admitted.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GenMode {
    /// `qr_ii(a)` needs `a` in `Lambda`, `ql_ii(a)` needs `conj(a)` in `Lambda`.
    #[default]
    Strict,
    /// Only the hermitian condition: the same with `Lambda_max`.
    HermitianOnly,
}

/// A form ring `(R, Lambda)` with the generator mode in force.
#[derive(Clone, Debug)]
pub struct FormRing {
    pub ring: Arc<RingCtx>,
    pub lambda: FormParam,
    pub mode: GenMode,
    odd: Vec<bool>,
}

impl FormRing {
    pub fn new(lambda: FormParam, mode: GenMode) -> Arc<FormRing> {
        let odd = lambda.odd_part();
        Arc::new(FormRing { ring: lambda.ring().clone(), lambda, mode, odd })
    }

    /// Admissibility of a diagonal parameter over `R`.
    pub fn diag_ok(&self, fam: Family, a: Elem) -> bool {
        let r = &self.ring;
        let x = if fam == Family::L { r.conj_e(a) } else { a };
        match self.mode {
            GenMode::Strict => self.lambda.contains(x),
            GenMode::HermitianOnly => in_lambda_max(r, x),
        }
    }

    /// Admissibility of a diagonal parameter over `R[X,T]`, using `Lambda[X,T]`.
    pub fn diag_ok_poly(&self, fam: Family, a: &Poly) -> bool {
        let r = &self.ring;
        let x = if fam == Family::L { a.map_coeffs(|c| r.conj_e(c)) } else { a.clone() };
        match self.mode {
            GenMode::Strict => poly_param_contains(&self.lambda, &self.odd, &x),
            GenMode::HermitianOnly => x.terms().iter().all(|(_, c)| in_lambda_max(r, *c)),
        }
    }

    pub fn odd_part(&self) -> &[bool] {
        &self.odd
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Eps,
    R,
    L,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Eps, Family::R, Family::L];

    pub fn name(self) -> &'static str {
        match self {
            Family::Eps => "eps",
            Family::R => "r",
            Family::L => "l",
        }
    }

    pub fn parse(s: &str) -> Result<Family> {
        match s {
            "eps" => Ok(Family::Eps),
            "r" => Ok(Family::R),
            "l" => Ok(Family::L),
            _ => Err(Error::Parse(format!("unknown generator family `{s}`"))),
        }
    }
}

pub fn check_indices(n: usize, fam: Family, i: usize, j: usize) -> Result<()> {
    if i == 0 || j == 0 || i > n || j > n || (fam == Family::Eps && i == j) || n > MAX_N {
        return Err(Error::BadIndex { i, j, n });
    }
    Ok(())
}

/// Off-identity entries `(row, col, value)` of a generator (indices 1-based
/// in, 0-based out). Rows written never coincide with rows read, so the
/// entries can be applied as successive row operations.
pub fn gen_entries<R: Ring>(ring: &R, n: usize, fam: Family, i: usize, j: usize, a: &R::El) -> Vec<(usize, usize, R::El)> {
    let (i, j) = (i - 1, j - 1);
    let abar = ring.conj(a);
    match (fam, i == j) {
        (Family::Eps, _) => vec![(i, j, a.clone()), (n + j, n + i, ring.neg(&abar))],
        (Family::R, false) => vec![(i, n + j, a.clone()), (j, n + i, ring.neg(&ring.mul(&ring.lambda(), &abar)))],
        (Family::R, true) => vec![(i, n + i, a.clone())],
        (Family::L, false) => vec![(n + i, j, a.clone()), (n + j, i, ring.neg(&ring.mul(&ring.lambda_bar(), &abar)))],
        (Family::L, true) => vec![(n + i, i, a.clone())],
    }
}

pub fn gen_matrix<R: Ring>(ring: &R, n: usize, fam: Family, i: usize, j: usize, a: &R::El) -> Mat<R::El> {
    let mut m = identity(ring, 2 * n);
    for (r, c, v) in gen_entries(ring, n, fam, i, j, a) {
        m.set(r, c, v);
    }
    m
}

/// Left-multiply `m` in place by the generator.
pub fn apply_gen_left<R: Ring>(ring: &R, m: &mut Mat<R::El>, fam: Family, i: usize, j: usize, a: &R::El) {
    let n = m.dim / 2;
    let dim = m.dim;
    for (r, c, v) in gen_entries(ring, n, fam, i, j, a) {
        if ring.is_zero(&v) {
            continue;
        }
        for k in 0..dim {
            let src = m.get(c, k);
            if ring.is_zero(src) {
                continue;
            }
            let nv = ring.add(m.get(r, k), &ring.mul(&v, src));
            m.set(r, k, nv);
        }
    }
}

/// Right-multiply `m` in place by the generator.
pub fn apply_gen_right<R: Ring>(ring: &R, m: &mut Mat<R::El>, fam: Family, i: usize, j: usize, a: &R::El) {
    let n = m.dim / 2;
    let dim = m.dim;
    // M (I + v e_rc): column c += v * column r
    for (r, c, v) in gen_entries(ring, n, fam, i, j, a) {
        if ring.is_zero(&v) {
            continue;
        }
        for k in 0..dim {
            let src = m.get(k, r);
            if ring.is_zero(src) {
                continue;
            }
            let nv = ring.add(m.get(k, c), &ring.mul(src, &v));
            m.set(k, c, nv);
        }
    }
}

fn checked_gen(fr: &FormRing, n: usize, fam: Family, i: usize, j: usize, a: Elem) -> Result<Mat<Elem>> {
    check_indices(n, fam, i, j)?;
    if fam != Family::Eps && i == j && !fr.diag_ok(fam, a) {
        return Err(Error::DiagonalParameterNotInLambda(label_text(fr.ring.label(a))));
    }
    Ok(gen_matrix(&fr.ring, n, fam, i, j, &a))
}

pub fn elem_eps(fr: &FormRing, n: usize, i: usize, j: usize, a: Elem) -> Result<Mat<Elem>> {
    checked_gen(fr, n, Family::Eps, i, j, a)
}

pub fn elem_r(fr: &FormRing, n: usize, i: usize, j: usize, a: Elem) -> Result<Mat<Elem>> {
    checked_gen(fr, n, Family::R, i, j, a)
}

pub fn elem_l(fr: &FormRing, n: usize, i: usize, j: usize, a: Elem) -> Result<Mat<Elem>> {
    checked_gen(fr, n, Family::L, i, j, a)
}

pub fn elem(fr: &FormRing, n: usize, fam: Family, i: usize, j: usize, a: Elem) -> Result<Mat<Elem>> {
    checked_gen(fr, n, fam, i, j, a)
}

/// Every admissible generator `(fam, i, j, a)` at rank `n` with `a != 0`.
pub fn all_generators(fr: &FormRing, n: usize) -> Vec<(Family, usize, usize, Elem)> {
    let mut out = Vec::new();
    for fam in Family::ALL {
        for i in 1..=n {
            for j in 1..=n {
                if check_indices(n, fam, i, j).is_err() {
                    continue;
                }
                for a in fr.ring.elements().skip(1) {
                    if fam != Family::Eps && i == j && !fr.diag_ok(fam, a) {
                        continue;
                    }
                    out.push((fam, i, j, a));
                }
            }
        }
    }
    out
}

pub fn psi<R: Ring>(ring: &R, n: usize) -> Mat<R::El> {
    let mut m = zero_mat(ring, 2 * n);
    for i in 0..n {
        m.set(i, n + i, ring.lambda());
        m.set(n + i, i, ring.one());
    }
    m
}

pub fn check_vec(n: usize, u: &[Elem]) -> Result<()> {
    if u.len() != 2 * n {
        return Err(Error::DimensionMismatch(format!("vector of length {} in rank {}", u.len(), 2 * n)));
    }
    Ok(())
}

/// `f(u, v) = lambda * sum conj(u_i) v_{-i}`.
pub fn sesq_f(r: &RingCtx, n: usize, u: &[Elem], v: &[Elem]) -> Result<Elem> {
    check_vec(n, u)?;
    check_vec(n, v)?;
    Ok(sesq_f_raw(r, n, u, v))
}

fn sesq_f_raw(r: &RingCtx, n: usize, u: &[Elem], v: &[Elem]) -> Elem {
    let mut acc = Elem(0);
    for i in 0..n {
        acc = r.add_e(acc, r.mul_e(r.conj_e(u[i]), v[n + i]));
    }
    r.mul_e(r.lambda_el(), acc)
}

/// `h(u, v) = u^* psi_n v = f(u, v) + lambda conj(f(v, u))`.
pub fn herm_h(r: &RingCtx, n: usize, u: &[Elem], v: &[Elem]) -> Result<Elem> {
    check_vec(n, u)?;
    check_vec(n, v)?;
    Ok(herm_h_raw(r, n, u, v))
}

fn herm_h_raw(r: &RingCtx, n: usize, u: &[Elem], v: &[Elem]) -> Elem {
    let mut acc = Elem(0);
    for i in 0..n {
        acc = r.add_e(acc, r.mul_e(r.mul_e(r.lambda_el(), r.conj_e(u[i])), v[n + i]));
        acc = r.add_e(acc, r.mul_e(r.conj_e(u[n + i]), v[i]));
    }
    acc
}

pub fn quad_q(lambda: &FormParam, n: usize, u: &[Elem]) -> Result<LambdaCoset> {
    Ok(lambda.coset(sesq_f(lambda.ring(), n, u, u)?))
}

pub fn basis_vec(r: &RingCtx, n: usize, k: usize) -> Vec<Elem> {
    let mut v = vec![Elem(0); 2 * n];
    v[k] = r.one_el();
    v
}

/// First violated membership condition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    Member,
    OddSize,
    /// `(sigma^* psi sigma)[row][col] != psi[row][col]`.
    Hermitian {
        row: usize,
        col: usize,
    },
    /// `f(c, c)` not in `Lambda` for column `col`.
    Quadratic {
        col: usize,
    },
}

impl Certificate {
    pub fn ok(&self) -> bool {
        *self == Certificate::Member
    }
}

pub fn gq_certificate(fr: &FormRing, sigma: &Mat<Elem>) -> Certificate {
    if !sigma.dim.is_multiple_of(2) {
        return Certificate::OddSize;
    }
    let r = &fr.ring;
    let n = sigma.dim / 2;
    let p = psi(r, n);
    let lhs = mat_mul(r, &mat_mul(r, &conj_transpose(r, sigma), &p), sigma);
    for row in 0..2 * n {
        for col in 0..2 * n {
            if lhs.get(row, col) != p.get(row, col) {
                return Certificate::Hermitian { row, col };
            }
        }
    }
    for col in 0..2 * n {
        let c = sigma.column(col);
        if !fr.lambda.contains(sesq_f_raw(r, n, &c, &c)) {
            return Certificate::Quadratic { col };
        }
    }
    Certificate::Member
}

/// Membership in `GQ_{2n}(R, Lambda)`. The hermitian condition forces
/// invertibility, with inverse `psi^{-1} sigma^* psi`.
pub fn is_in_gq(fr: &FormRing, sigma: &Mat<Elem>) -> bool {
    gq_certificate(fr, sigma).ok()
}

/// Inverse of a group element: `psi^{-1} sigma^* psi`.
pub fn gq_inverse<R: Ring>(r: &R, sigma: &Mat<R::El>) -> Mat<R::El> {
    let n = sigma.dim / 2;
    let p = psi(r, n);
    let mut pinv = zero_mat(r, 2 * n);
    for i in 0..n {
        pinv.set(i, n + i, r.one());
        pinv.set(n + i, i, r.lambda_bar());
    }
    mat_mul(r, &mat_mul(r, &pinv, &conj_transpose(r, sigma)), &p)
}

/// `sigma_{u,a,v}(x) = x + u h(v,x) - v lambda-bar h(u,x) - u lambda-bar a h(u,x)`.
pub fn transvection(fr: &FormRing, n: usize, u: &[Elem], a: Elem, v: &[Elem]) -> Result<Mat<Elem>> {
    let r = &fr.ring;
    check_vec(n, u)?;
    check_vec(n, v)?;
    if !fr.lambda.contains(sesq_f_raw(r, n, u, u)) {
        return Err(Error::PreconditionViolated("f(u,u) is not in Lambda".into()));
    }
    if herm_h_raw(r, n, u, v) != Elem(0) {
        return Err(Error::PreconditionViolated("h(u,v) != 0".into()));
    }
    if !fr.lambda.contains(r.sub_e(sesq_f_raw(r, n, v, v), a)) {
        return Err(Error::PreconditionViolated("f(v,v) != a mod Lambda".into()));
    }
    let lbar = r.conj_e(r.lambda_el());
    let mut m = zero_mat(r, 2 * n);
    for k in 0..2 * n {
        let x = basis_vec(r, n, k);
        let hv = herm_h_raw(r, n, v, &x);
        let hu = herm_h_raw(r, n, u, &x);
        let cu = r.sub_e(hv, r.mul_e(r.mul_e(lbar, a), hu));
        let cv = r.neg_e(r.mul_e(lbar, hu));
        for row in 0..2 * n {
            let val = r.add_e(x[row], r.add_e(r.mul_e(u[row], cu), r.mul_e(v[row], cv)));
            m.set(row, k, val);
        }
    }
    Ok(m)
}

/// Where the new hyperbolic pair goes under stabilization.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    /// New pair after the old ones.
    #[default]
    Outer,
    /// New pair in the middle, at position `ceil(n/2)`.
    Mid,
    /// New pair before the old ones.
    Inner,
}

impl Slot {
    pub fn position(self, n: usize) -> usize {
        match self {
            Slot::Outer => n,
            Slot::Mid => n.div_ceil(2),
            Slot::Inner => 0,
        }
    }

    /// Index of old pair `k` (0-based) at rank `n + 1`.
    pub fn shift(self, n: usize, k: usize) -> usize {
        if k < self.position(n) {
            k
        } else {
            k + 1
        }
    }

    pub fn parse(s: &str) -> Result<Slot> {
        match s {
            "outer" => Ok(Slot::Outer),
            "mid" => Ok(Slot::Mid),
            "inner" => Ok(Slot::Inner),
            _ => Err(Error::Parse(format!("unknown slot `{s}`"))),
        }
    }
}

pub fn stab_embed<R: Ring>(ring: &R, sigma: &Mat<R::El>, slot: Slot) -> Mat<R::El> {
    let n = sigma.dim / 2;
    let m = n + 1;
    let coord = |k: usize| if k < n { slot.shift(n, k) } else { m + slot.shift(n, k - n) };
    let mut out = identity(ring, 2 * m);
    for r in 0..2 * n {
        for c in 0..2 * n {
            out.set(coord(r), coord(c), sigma.get(r, c).clone());
        }
    }
    out
}

/// Permute from block order to `e_1, ..., e_n, e_{-n}, ..., e_{-1}`.
pub fn to_display_order<E: Clone>(sigma: &Mat<E>) -> Mat<E> {
    let n = sigma.dim / 2;
    let pos = |k: usize| if k < n { k } else { 2 * n - 1 - (k - n) };
    let mut entries = sigma.entries.clone();
    for r in 0..2 * n {
        for c in 0..2 * n {
            entries[pos(r) * 2 * n + pos(c)] = sigma.get(r, c).clone();
        }
    }
    Mat { dim: sigma.dim, entries }
}

pub fn is_congruent_mod(r: &RingCtx, sigma: &Mat<Elem>, ideal: &Ideal) -> bool {
    (0..sigma.dim).all(|i| {
        (0..sigma.dim).all(|j| {
            let d = if i == j { r.sub_e(*sigma.get(i, j), r.one_el()) } else { *sigma.get(i, j) };
            ideal.contains(d)
        })
    })
}

pub fn rows_json(r: &RingCtx, m: &Mat<Elem>) -> Value {
    Value::Array(m.rows().iter().map(|row| Value::Array(row.iter().map(|&x| r.label(x).clone()).collect())).collect())
}

/// `{"ring", "lambda", "Lambda", "n", "rows"}`.
pub fn matrix_to_json(fr: &FormRing, m: &Mat<Elem>) -> Value {
    let r = &fr.ring;
    serde_json::json!({
        "ring": r.description(),
        "lambda": r.label(r.lambda_el()),
        "Lambda": fr.lambda.elements().iter().map(|&x| r.label(x).clone()).collect::<Vec<_>>(),
        "n": m.dim / 2,
        "rows": rows_json(r, m),
    })
}

/// Reads the `rows` of a matrix document (or a bare array of rows).
pub fn matrix_from_json(r: &RingCtx, v: &Value) -> Result<Mat<Elem>> {
    let rows = v.get("rows").unwrap_or(v);
    let rows = rows.as_array().ok_or_else(|| Error::Parse("matrix rows must be an array".into()))?;
    let dim = rows.len();
    let mut entries = Vec::with_capacity(dim * dim);
    for row in rows {
        let row = row.as_array().ok_or_else(|| Error::Parse("matrix row must be an array".into()))?;
        if row.len() != dim {
            return Err(Error::DimensionMismatch(format!("row of length {} in a {dim}x{dim} matrix", row.len())));
        }
        for x in row {
            entries.push(r.parse_label(x)?);
        }
    }
    Ok(Mat { dim, entries })
}
