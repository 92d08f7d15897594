//! Sparse polynomials in `X` and `T` over a finite base ring.
//!
//! One representation covers `R[X]`, `R[X,T]` and `R[X,T,U]` (the last
//! variable is the auxiliary one used while dilating); a univariate
//! polynomial is simply one with no `T` or `U` terms. Terms are kept sorted by
//! monomial with no zero coefficients, so structural equality is ring
//! equality.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use serde_json::{json, Value};

use crate::algebra::{Mat, Ring};
use crate::error::{Error, Result};
use crate::ring::{Elem, RingCtx};

pub const DEFAULT_DEGREE_CAP: u32 = 32;

/// Exponents of `X`, `T` and `U`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Mono {
    pub x: u32,
    pub t: u32,
    pub u: u32,
}

impl Mono {
    pub fn new(x: u32, t: u32, u: u32) -> Mono {
        Mono { x, t, u }
    }

    pub fn exp(&self, v: Var) -> u32 {
        match v {
            Var::X => self.x,
            Var::T => self.t,
            Var::U => self.u,
        }
    }

    fn plus(self, o: Mono) -> Mono {
        Mono { x: self.x + o.x, t: self.t + o.t, u: self.u + o.u }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    T,
    U,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    terms: Vec<(Mono, Elem)>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly { terms: Vec::new() }
    }

    pub fn constant(c: Elem) -> Poly {
        Poly::monomial(c, 0, 0)
    }

    pub fn monomial(c: Elem, x: u32, t: u32) -> Poly {
        Poly::term(c, Mono::new(x, t, 0))
    }

    pub fn term(c: Elem, m: Mono) -> Poly {
        if c == Elem(0) {
            Poly::zero()
        } else {
            Poly { terms: vec![(m, c)] }
        }
    }

    /// Univariate polynomial from coefficients, lowest degree first.
    pub fn from_coeffs(coeffs: &[Elem]) -> Poly {
        let terms = coeffs.iter().enumerate().filter(|(_, c)| **c != Elem(0)).map(|(i, &c)| (Mono::new(i as u32, 0, 0), c)).collect();
        Poly { terms }
    }

    fn from_map(map: BTreeMap<Mono, Elem>) -> Poly {
        Poly { terms: map.into_iter().filter(|(_, c)| *c != Elem(0)).collect() }
    }

    pub fn terms(&self) -> &[(Mono, Elem)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, x: u32, t: u32) -> Elem {
        self.coeff_at(Mono::new(x, t, 0))
    }

    pub fn coeff_at(&self, m: Mono) -> Elem {
        self.terms.binary_search_by(|(k, _)| k.cmp(&m)).map(|i| self.terms[i].1).unwrap_or(Elem(0))
    }

    pub fn constant_term(&self) -> Elem {
        self.coeff(0, 0)
    }

    pub fn deg_x(&self) -> u32 {
        self.terms.iter().map(|(m, _)| m.x).max().unwrap_or(0)
    }

    pub fn deg_t(&self) -> u32 {
        self.terms.iter().map(|(m, _)| m.t).max().unwrap_or(0)
    }

    pub fn deg(&self, v: Var) -> u32 {
        self.terms.iter().map(|(m, _)| m.exp(v)).max().unwrap_or(0)
    }

    pub fn is_univariate(&self) -> bool {
        self.terms.iter().all(|(m, _)| m.t == 0 && m.u == 0)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|(m, _)| *m == Mono::default())
    }

    /// Largest `k` with `v^k` dividing the polynomial (`None` for zero).
    pub fn valuation(&self, v: Var) -> Option<u32> {
        self.terms.iter().map(|(m, _)| m.exp(v)).min()
    }

    /// The terms free of `v`, i.e. the value at `v = 0`.
    pub fn at_zero(&self, v: Var) -> Poly {
        Poly { terms: self.terms.iter().filter(|(m, _)| m.exp(v) == 0).copied().collect() }
    }

    /// The terms divisible by `v`; `p = p.at_zero(v) + p.divisible_part(v)`.
    pub fn divisible_part(&self, v: Var) -> Poly {
        Poly { terms: self.terms.iter().filter(|(m, _)| m.exp(v) > 0).copied().collect() }
    }

    /// Divide by `v^k`; terms of lower order are dropped.
    pub fn shift_down(&self, v: Var, k: u32) -> Poly {
        let map: BTreeMap<Mono, Elem> = self
            .terms
            .iter()
            .filter(|(m, _)| m.exp(v) >= k)
            .map(|(m, c)| {
                let mut m = *m;
                match v {
                    Var::X => m.x -= k,
                    Var::T => m.t -= k,
                    Var::U => m.u -= k,
                }
                (m, *c)
            })
            .collect();
        Poly::from_map(map)
    }

    /// Coefficients in `X`, lowest first; requires a univariate polynomial.
    pub fn x_coeffs(&self) -> Vec<Elem> {
        let mut out = vec![Elem(0); self.deg_x() as usize + 1];
        for (m, c) in &self.terms {
            out[m.x as usize] = *c;
        }
        if self.is_zero() {
            out.clear();
        }
        out
    }

    /// Apply a map to every coefficient (e.g. a ring homomorphism).
    pub fn map_coeffs(&self, f: impl Fn(Elem) -> Elem) -> Poly {
        Poly::from_map(self.terms.iter().map(|(m, c)| (*m, f(*c))).collect())
    }

    /// Univariate: coefficient array. Bivariate: rows by `X`-degree, columns
    /// by `T`-degree. With `U` terms: one more nesting level for `U`.
    pub fn to_json(&self, ring: &RingCtx) -> Value {
        if self.is_univariate() {
            return Value::Array(self.x_coeffs().iter().map(|&c| ring.label(c).clone()).collect());
        }
        let has_u = self.terms.iter().any(|(m, _)| m.u > 0);
        let (dt, du) = (self.deg(Var::T), self.deg(Var::U));
        let rows = (0..=self.deg(Var::X))
            .map(|i| {
                Value::Array(
                    (0..=dt)
                        .map(|j| {
                            if has_u {
                                Value::Array((0..=du).map(|k| ring.label(self.coeff_at(Mono::new(i, j, k))).clone()).collect())
                            } else {
                                ring.label(self.coeff(i, j)).clone()
                            }
                        })
                        .collect(),
                )
            })
            .collect();
        Value::Array(rows)
    }

    /// Inverse of [`Poly::to_json`].
    pub fn from_json(ring: &RingCtx, v: &Value) -> Result<Poly> {
        let mut map = BTreeMap::new();
        collect_json(ring, v, &mut Vec::new(), &mut map, v)?;
        Ok(Poly::from_map(map))
    }
}

fn collect_json(ring: &RingCtx, v: &Value, path: &mut Vec<u32>, map: &mut BTreeMap<Mono, Elem>, whole: &Value) -> Result<()> {
    if !path.is_empty() || !v.is_array() {
        if let Ok(c) = ring.parse_label(v) {
            let get = |k: usize| path.get(k).copied().unwrap_or(0);
            map.insert(Mono::new(get(0), get(1), get(2)), c);
            return Ok(());
        }
    }
    let items = v.as_array().ok_or_else(|| Error::Parse(format!("bad polynomial `{whole}`")))?;
    if path.len() >= 3 {
        return Err(Error::Parse(format!("bad polynomial `{whole}`")));
    }
    for (i, item) in items.iter().enumerate() {
        path.push(i as u32);
        collect_json(ring, item, path, map, whole)?;
        path.pop();
    }
    Ok(())
}

/// A substitution homomorphism `X -> x, T -> t, U -> u` fixing coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subst {
    pub x: Poly,
    pub t: Poly,
    pub u: Poly,
}

/// `R[X]` or `R[X,T]` as a [`Ring`], with a per-variable degree cap.
///
/// Products exceeding the cap are truncated and flag the ring as
/// overflowed; callers check [`PolyRing::check_overflow`] at the end of a
/// computation instead of threading a `Result` through every product.
pub struct PolyRing {
    base: Arc<RingCtx>,
    cap: u32,
    overflow: AtomicBool,
}

impl fmt::Debug for PolyRing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PolyRing({}, cap {})", self.base.description(), self.cap)
    }
}

impl PolyRing {
    pub fn new(base: &Arc<RingCtx>) -> PolyRing {
        PolyRing::with_cap(base, DEFAULT_DEGREE_CAP)
    }

    pub fn with_cap(base: &Arc<RingCtx>, cap: u32) -> PolyRing {
        PolyRing { base: base.clone(), cap, overflow: AtomicBool::new(false) }
    }

    pub fn base(&self) -> &Arc<RingCtx> {
        &self.base
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn check_overflow(&self) -> Result<()> {
        if self.overflow.swap(false, Ordering::Relaxed) {
            Err(Error::DegreeOverflow(self.cap as usize))
        } else {
            Ok(())
        }
    }

    pub fn x(&self) -> Poly {
        Poly::monomial(self.base.one_el(), 1, 0)
    }

    pub fn t(&self) -> Poly {
        Poly::monomial(self.base.one_el(), 0, 1)
    }

    pub fn u(&self) -> Poly {
        Poly::term(self.base.one_el(), Mono::new(0, 0, 1))
    }

    pub fn var(&self, v: Var) -> Poly {
        match v {
            Var::X => self.x(),
            Var::T => self.t(),
            Var::U => self.u(),
        }
    }

    pub fn constant(&self, c: Elem) -> Poly {
        Poly::constant(c)
    }

    pub fn scale(&self, c: Elem, p: &Poly) -> Poly {
        p.map_coeffs(|a| self.base.mul_e(c, a))
    }

    pub fn pow(&self, p: &Poly, k: u32) -> Poly {
        let mut acc = self.one();
        for _ in 0..k {
            acc = self.mul(&acc, p);
        }
        acc
    }

    pub fn identity_subst(&self) -> Subst {
        Subst { x: self.x(), t: self.t(), u: self.u() }
    }

    /// Apply a substitution homomorphism.
    pub fn subst(&self, p: &Poly, s: &Subst) -> Poly {
        let mut xs: Vec<Poly> = vec![self.one()];
        let mut ts: Vec<Poly> = vec![self.one()];
        let mut us: Vec<Poly> = vec![self.one()];
        let grow = |pows: &mut Vec<Poly>, img: &Poly, k: u32| {
            while pows.len() <= k as usize {
                let next = self.mul(pows.last().unwrap(), img);
                pows.push(next);
            }
        };
        let mut acc = Poly::zero();
        for (m, c) in p.terms() {
            grow(&mut xs, &s.x, m.x);
            grow(&mut ts, &s.t, m.t);
            grow(&mut us, &s.u, m.u);
            let mono = self.mul(&self.mul(&xs[m.x as usize], &ts[m.t as usize]), &us[m.u as usize]);
            acc = self.add(&acc, &self.scale(*c, &mono));
        }
        acc
    }

    /// Value at `X = x0, T = t0, U = u0` in the base ring.
    pub fn eval_at(&self, p: &Poly, x0: Elem, t0: Elem, u0: Elem) -> Elem {
        let r = &self.base;
        let mut acc = Elem(0);
        for (m, c) in p.terms() {
            let v = r.mul_e(*c, r.mul_e(r.mul_e(r.pow(x0, m.x), r.pow(t0, m.t)), r.pow(u0, m.u)));
            acc = r.add_e(acc, v);
        }
        acc
    }

    pub fn subst_mat(&self, a: &Mat<Poly>, s: &Subst) -> Mat<Poly> {
        a.map(|p| self.subst(p, s))
    }

    pub fn eval_mat(&self, a: &Mat<Poly>, x0: Elem, t0: Elem, u0: Elem) -> Mat<Elem> {
        a.map(|p| self.eval_at(p, x0, t0, u0))
    }

    pub fn display(&self, p: &Poly) -> String {
        if p.is_zero() {
            return "0".into();
        }
        let parts: Vec<String> = p
            .terms()
            .iter()
            .map(|(m, c)| {
                let mut s = crate::ring::label_text(self.base.label(*c));
                if m.x > 0 {
                    s.push_str(if m.x == 1 { "X".into() } else { format!("X^{}", m.x) }.as_str());
                }
                if m.t > 0 {
                    s.push_str(if m.t == 1 { "T".into() } else { format!("T^{}", m.t) }.as_str());
                }
                if m.u > 0 {
                    s.push_str(if m.u == 1 { "U".into() } else { format!("U^{}", m.u) }.as_str());
                }
                s
            })
            .collect();
        parts.join(" + ")
    }
}

impl Ring for PolyRing {
    type El = Poly;

    fn zero(&self) -> Poly {
        Poly::zero()
    }

    fn one(&self) -> Poly {
        Poly::constant(self.base.one_el())
    }

    fn add(&self, a: &Poly, b: &Poly) -> Poly {
        if a.is_zero() {
            return b.clone();
        }
        if b.is_zero() {
            return a.clone();
        }
        let r = &self.base;
        let mut out = Vec::with_capacity(a.terms.len() + b.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < a.terms.len() || j < b.terms.len() {
            let take = match (a.terms.get(i), b.terms.get(j)) {
                (Some(x), Some(y)) => x.0.cmp(&y.0),
                (Some(_), None) => std::cmp::Ordering::Less,
                _ => std::cmp::Ordering::Greater,
            };
            match take {
                std::cmp::Ordering::Less => {
                    out.push(a.terms[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b.terms[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let c = r.add_e(a.terms[i].1, b.terms[j].1);
                    if c != Elem(0) {
                        out.push((a.terms[i].0, c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        Poly { terms: out }
    }

    fn neg(&self, a: &Poly) -> Poly {
        a.map_coeffs(|c| self.base.neg_e(c))
    }

    fn mul(&self, a: &Poly, b: &Poly) -> Poly {
        if a.is_zero() || b.is_zero() {
            return Poly::zero();
        }
        let r = &self.base;
        let mut map: BTreeMap<Mono, Elem> = BTreeMap::new();
        for (ma, ca) in &a.terms {
            for (mb, cb) in &b.terms {
                let m = ma.plus(*mb);
                let c = r.mul_e(*ca, *cb);
                if c == Elem(0) {
                    continue;
                }
                if m.x > self.cap || m.t > self.cap || m.u > self.cap {
                    self.overflow.store(true, Ordering::Relaxed);
                    continue;
                }
                let e = map.entry(m).or_insert(Elem(0));
                *e = r.add_e(*e, c);
            }
        }
        Poly::from_map(map)
    }

    fn conj(&self, a: &Poly) -> Poly {
        a.map_coeffs(|c| self.base.conj_e(c))
    }

    fn lambda(&self) -> Poly {
        Poly::constant(self.base.lambda_el())
    }
}

/// Lift a constant matrix into polynomial entries.
pub fn const_mat(a: &Mat<Elem>) -> Mat<Poly> {
    a.map(|&c| Poly::constant(c))
}

pub fn poly_mat_json(ring: &RingCtx, a: &Mat<Poly>) -> Value {
    json!(a.rows().iter().map(|row| row.iter().map(|p| p.to_json(ring)).collect::<Vec<_>>()).collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn z6() -> Arc<RingCtx> {
        RingCtx::parse("Zmod 6, trivial, lambda=-1").unwrap()
    }

    fn arb_poly(size: u16) -> impl Strategy<Value = Poly> {
        prop::collection::vec((0u32..4, 0u32..3, 0u32..2, 0..size), 0..6).prop_map(|ts| {
            let mut map = BTreeMap::new();
            for (x, t, u, c) in ts {
                map.insert(Mono::new(x, t, u), Elem(c));
            }
            Poly::from_map(map)
        })
    }

    #[test]
    fn basic_arithmetic() {
        let r = z6();
        let p = PolyRing::new(&r);
        let a = Poly::from_coeffs(&[Elem(3), Elem(2)]);
        let sq = p.mul(&a, &a);
        // (3 + 2X)^2 = 9 + 12X + 4X^2 = 3 + 0X + 4X^2 mod 6
        assert_eq!(sq, Poly::from_coeffs(&[Elem(3), Elem(0), Elem(4)]));
        assert_eq!(p.add(&a, &p.neg(&a)), Poly::zero());
    }

    #[test]
    fn substitution_examples() {
        let r = z6();
        let p = PolyRing::new(&r);
        let x = p.x();
        let t = p.t();
        let xt3 = p.mul(&x, &p.pow(&t, 3));
        let dil = Subst { x: xt3, ..p.identity_subst() };
        assert_eq!(p.subst(&x, &dil), Poly::monomial(Elem(1), 1, 3));
        let a = Poly::from_coeffs(&[Elem(1), Elem(5), Elem(2)]);
        assert_eq!(p.subst(&a, &p.identity_subst()), a);
        let at0 = Subst { x: Poly::zero(), ..p.identity_subst() };
        assert_eq!(p.subst(&a, &at0), Poly::constant(Elem(1)));
        assert_eq!(a.at_zero(Var::X), Poly::constant(Elem(1)));
        assert_eq!(p.mul(&a, &x).valuation(Var::X), Some(1));
        assert_eq!(p.mul(&a, &x).shift_down(Var::X, 1), a);
    }

    #[test]
    fn overflow_is_reported() {
        let r = z6();
        let p = PolyRing::with_cap(&r, 3);
        let x = p.x();
        let _ = p.pow(&x, 5);
        assert_eq!(p.check_overflow(), Err(Error::DegreeOverflow(3)));
        assert_eq!(p.check_overflow(), Ok(()));
    }

    #[test]
    fn json_round_trip() {
        let r = z6();
        let a = Poly::from_coeffs(&[Elem(3), Elem(0), Elem(4)]);
        assert_eq!(a.to_json(&r), json!([3, 0, 4]));
        assert_eq!(Poly::from_json(&r, &json!([3, 0, 4])).unwrap(), a);
        let b = Poly::monomial(Elem(2), 1, 2);
        let v = b.to_json(&r);
        assert_eq!(v, json!([[0, 0, 0], [0, 0, 2]]));
        assert_eq!(Poly::from_json(&r, &v).unwrap(), b);

        let c = Poly::term(Elem(5), Mono::new(1, 0, 2));
        assert_eq!(Poly::from_json(&r, &c.to_json(&r)).unwrap(), c);

        let g = RingCtx::parse("GaussMod 3, conj, lambda=1").unwrap();
        let c = Poly::from_coeffs(&[Elem(4), Elem(1)]);
        let v = c.to_json(&g);
        assert_eq!(v, json!([[1, 1], [0, 1]]));
        assert_eq!(Poly::from_json(&g, &v).unwrap(), c);
    }

    proptest! {
        #[test]
        fn subst_is_a_homomorphism(a in arb_poly(6), b in arb_poly(6), x in arb_poly(6), t in arb_poly(6), u in arb_poly(6)) {
            let r = z6();
            let p = PolyRing::new(&r);
            let s = Subst { x, t, u };
            let lhs = p.subst(&p.mul(&a, &b), &s);
            let rhs = p.mul(&p.subst(&a, &s), &p.subst(&b, &s));
            prop_assume!(p.check_overflow().is_ok());
            prop_assert_eq!(lhs, rhs);
            prop_assert_eq!(p.subst(&p.add(&a, &b), &s), p.add(&p.subst(&a, &s), &p.subst(&b, &s)));
        }

        #[test]
        fn ring_axioms(a in arb_poly(6), b in arb_poly(6), c in arb_poly(6)) {
            let r = z6();
            let p = PolyRing::new(&r);
            prop_assert_eq!(p.mul(&a, &p.add(&b, &c)), p.add(&p.mul(&a, &b), &p.mul(&a, &c)));
            prop_assert_eq!(p.mul(&p.mul(&a, &b), &c), p.mul(&a, &p.mul(&b, &c)));
            prop_assert_eq!(p.mul(&a, &b), p.mul(&b, &a));
        }
    }
}
