//! Finite commutative rings with involution.
//!
//! Every supported ring is small enough to be stored as full addition and
//! multiplication tables over canonical element indices, which makes all
//! arithmetic a table lookup and equality of elements an integer compare.

mod ideal;
mod localize;
mod spec;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::algebra::Ring;
use crate::error::{Error, Result};

pub(crate) use ideal::additive_span as additive_span_of;
pub use ideal::{maximal_ideals, partition_of_unity, Ideal, MaximalIdeal, PartitionOfUnity};
pub use localize::{localize_at, LocalizationMap};
pub use spec::{label_text, parse_element};

/// Largest ring we are willing to tabulate.
pub const MAX_RING_SIZE: usize = 1024;

/// Canonical index of a ring element. Index order is the canonical element
/// order (least nonnegative residues, lexicographic on pairs/coefficients).
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Elem(pub u16);

impl Elem {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RingKind {
    Zmod(u32),
    Gf(u32),
    GaussMod(u32),
    /// `base[x] / (modulus)`, modulus monic, integer coefficients lowest first.
    PolyQuot {
        base: Box<RingKind>,
        modulus: Vec<i64>,
    },
    /// The corner ring `R e` of an idempotent `e`, i.e. a localization target.
    Corner {
        source: String,
        idempotent: Value,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Involution {
    Trivial,
    /// Gaussian conjugation, or the map it induces on a quotient.
    Conj,
}

/// A finite commutative ring with involution and a chosen central lambda.
pub struct RingCtx {
    kind: RingKind,
    involution: Involution,
    size: usize,
    add: Vec<u16>,
    mul: Vec<u16>,
    neg: Vec<u16>,
    conj: Vec<u16>,
    one: Elem,
    lambda: Elem,
    characteristic: u32,
    dimension: u32,
    labels: Vec<Value>,
    description: String,
}

impl fmt::Debug for RingCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RingCtx")
            .field("description", &self.description)
            .field("size", &self.size)
            .field("lambda", &self.labels[self.lambda.idx()])
            .finish()
    }
}

/// Raw tables a concrete ring construction hands to [`RingCtx::from_tables`].
pub(crate) struct RingTables {
    pub kind: RingKind,
    pub involution: Involution,
    pub labels: Vec<Value>,
    pub add: Vec<u16>,
    pub mul: Vec<u16>,
    pub neg: Vec<u16>,
    pub conj: Vec<u16>,
    pub one: Elem,
    pub lambda: Elem,
    pub description: String,
}

impl RingCtx {
    /// Parse a textual ring description, e.g. `Zmod 6, trivial, lambda=-1`.
    pub fn parse(spec: &str) -> Result<Arc<RingCtx>> {
        spec::make_ring(spec).map(Arc::new)
    }

    pub(crate) fn from_tables(t: RingTables) -> Result<RingCtx> {
        let size = t.labels.len();
        let mut ctx = RingCtx {
            kind: t.kind,
            involution: t.involution,
            size,
            add: t.add,
            mul: t.mul,
            neg: t.neg,
            conj: t.conj,
            one: t.one,
            lambda: t.lambda,
            characteristic: 0,
            dimension: 0,
            labels: t.labels,
            description: t.description,
        };
        let mut c = 1u32;
        let mut acc = ctx.one;
        while acc != Elem(0) {
            acc = ctx.add(&acc, &ctx.one);
            c += 1;
        }
        ctx.characteristic = c;
        ctx.verify()?;
        Ok(ctx)
    }

    /// Exhaustive check that the involution is an additive, multiplicative,
    /// self-inverse map fixing 1 and that lambda * conj(lambda) = 1.
    fn verify(&self) -> Result<()> {
        if self.conj(&self.one) != self.one {
            return Err(Error::NotAnInvolution("conj(1) != 1".into()));
        }
        for a in self.elements() {
            if self.conj(&self.conj(&a)) != a {
                return Err(Error::NotAnInvolution(format!("not self-inverse at {}", self.label(a))));
            }
            for b in self.elements() {
                if self.conj(&self.add(&a, &b)) != self.add(&self.conj(&a), &self.conj(&b)) {
                    return Err(Error::NotAnInvolution("not additive".into()));
                }
                if self.conj(&self.mul(&a, &b)) != self.mul(&self.conj(&a), &self.conj(&b)) {
                    return Err(Error::NotAnInvolution("not multiplicative".into()));
                }
            }
        }
        if self.mul(&self.lambda, &self.conj(&self.lambda)) != self.one {
            return Err(Error::BadLambda { lambda: self.label(self.lambda).to_string() });
        }
        Ok(())
    }

    /// Same ring with a different lambda.
    pub fn with_lambda(&self, lambda: Elem) -> Result<RingCtx> {
        let mut t = self.clone_tables();
        t.lambda = lambda;
        t.description = spec::replace_lambda(&self.description, self.label(lambda));
        RingCtx::from_tables(t)
    }

    pub(crate) fn clone_tables(&self) -> RingTables {
        RingTables {
            kind: self.kind.clone(),
            involution: self.involution,
            labels: self.labels.clone(),
            add: self.add.clone(),
            mul: self.mul.clone(),
            neg: self.neg.clone(),
            conj: self.conj.clone(),
            one: self.one,
            lambda: self.lambda,
            description: self.description.clone(),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn kind(&self) -> &RingKind {
        &self.kind
    }

    pub fn involution(&self) -> Involution {
        self.involution
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn characteristic(&self) -> u32 {
        self.characteristic
    }

    /// Declared Krull dimension; always 0 for the finite rings supported here.
    pub fn dimension(&self) -> u32 {
        self.dimension
    }

    pub fn elements(&self) -> impl Iterator<Item = Elem> + Clone {
        (0..self.size as u16).map(Elem)
    }

    pub fn one_el(&self) -> Elem {
        self.one
    }

    pub fn lambda_el(&self) -> Elem {
        self.lambda
    }

    #[inline]
    pub fn add_e(&self, a: Elem, b: Elem) -> Elem {
        Elem(self.add[a.idx() * self.size + b.idx()])
    }

    #[inline]
    pub fn mul_e(&self, a: Elem, b: Elem) -> Elem {
        Elem(self.mul[a.idx() * self.size + b.idx()])
    }

    #[inline]
    pub fn neg_e(&self, a: Elem) -> Elem {
        Elem(self.neg[a.idx()])
    }

    #[inline]
    pub fn sub_e(&self, a: Elem, b: Elem) -> Elem {
        self.add_e(a, self.neg_e(b))
    }

    #[inline]
    pub fn conj_e(&self, a: Elem) -> Elem {
        Elem(self.conj[a.idx()])
    }

    pub fn pow(&self, a: Elem, k: u32) -> Elem {
        let mut acc = self.one;
        for _ in 0..k {
            acc = self.mul_e(acc, a);
        }
        acc
    }

    /// Image of an integer under Z -> R.
    pub fn from_int(&self, k: i64) -> Elem {
        let c = self.characteristic as i64;
        let r = k.rem_euclid(c);
        let mut acc = Elem(0);
        for _ in 0..r {
            acc = self.add_e(acc, self.one);
        }
        acc
    }

    pub fn inverse(&self, a: Elem) -> Option<Elem> {
        self.elements().find(|&b| self.mul_e(a, b) == self.one)
    }

    pub fn is_unit(&self, a: Elem) -> bool {
        self.inverse(a).is_some()
    }

    pub fn is_nilpotent(&self, a: Elem) -> bool {
        let mut acc = a;
        for _ in 0..=self.size {
            if acc == Elem(0) {
                return true;
            }
            acc = self.mul_e(acc, a);
        }
        false
    }

    pub fn is_field(&self) -> bool {
        self.size > 1 && self.elements().skip(1).all(|a| self.is_unit(a))
    }

    pub fn idempotents(&self) -> Vec<Elem> {
        self.elements().filter(|&e| self.mul_e(e, e) == e).collect()
    }

    /// JSON label of an element (integer, `[a,b]` pair, or coefficient array).
    pub fn label(&self, a: Elem) -> &Value {
        &self.labels[a.idx()]
    }

    pub fn parse_label(&self, v: &Value) -> Result<Elem> {
        spec::parse_element(self, v)
    }

    pub(crate) fn labels(&self) -> &[Value] {
        &self.labels
    }

    /// Principal ideal `a R` as a membership table.
    pub fn principal(&self, a: Elem) -> Vec<bool> {
        let mut set = vec![false; self.size];
        for x in self.elements() {
            set[self.mul_e(a, x).idx()] = true;
        }
        set
    }
}

impl Ring for RingCtx {
    type El = Elem;

    fn zero(&self) -> Elem {
        Elem(0)
    }
    fn one(&self) -> Elem {
        self.one
    }
    fn add(&self, a: &Elem, b: &Elem) -> Elem {
        self.add_e(*a, *b)
    }
    fn neg(&self, a: &Elem) -> Elem {
        self.neg_e(*a)
    }
    fn mul(&self, a: &Elem, b: &Elem) -> Elem {
        self.mul_e(*a, *b)
    }
    fn conj(&self, a: &Elem) -> Elem {
        self.conj_e(*a)
    }
    fn lambda(&self) -> Elem {
        self.lambda
    }
}

impl Ring for Arc<RingCtx> {
    type El = Elem;

    fn zero(&self) -> Elem {
        Elem(0)
    }
    fn one(&self) -> Elem {
        self.one
    }
    fn add(&self, a: &Elem, b: &Elem) -> Elem {
        self.add_e(*a, *b)
    }
    fn neg(&self, a: &Elem) -> Elem {
        self.neg_e(*a)
    }
    fn mul(&self, a: &Elem, b: &Elem) -> Elem {
        self.mul_e(*a, *b)
    }
    fn conj(&self, a: &Elem) -> Elem {
        self.conj_e(*a)
    }
    fn lambda(&self) -> Elem {
        self.lambda
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zmod6_lambda_minus_one() {
        let r = RingCtx::parse("Zmod 6, trivial, lambda=-1").unwrap();
        assert_eq!(r.size(), 6);
        assert_eq!(r.lambda_el(), Elem(5));
        assert_eq!(r.characteristic(), 6);
    }

    #[test]
    fn rejects_bad_lambda() {
        let err = RingCtx::parse("Zmod 6, trivial, lambda=2").unwrap_err();
        assert!(matches!(err, Error::BadLambda { .. }));
    }

    #[test]
    fn gaussian_conjugation_is_an_involution() {
        let r = RingCtx::parse("GaussMod 3, conj, lambda=1").unwrap();
        assert_eq!(r.size(), 9);
        // oracle: conj(a + b i) = a - b i on the pair labels
        for a in r.elements() {
            let l = r.label(a).as_array().unwrap().clone();
            let c = r.label(r.conj_e(a)).as_array().unwrap().clone();
            assert_eq!(l[0], c[0]);
            let b = l[1].as_i64().unwrap();
            assert_eq!(c[1].as_i64().unwrap(), (3 - b) % 3);
        }
        assert!(r.is_field());
    }

    #[test]
    fn polyquot_builds_gf4() {
        let r = RingCtx::parse("PolyQuot Zmod 2 x^2+x+1, trivial, lambda=1").unwrap();
        assert_eq!(r.size(), 4);
        assert!(r.is_field());
        assert_eq!(r.characteristic(), 2);
    }

    #[test]
    fn from_int_reduces() {
        let r = RingCtx::parse("Zmod 4, trivial, lambda=1").unwrap();
        assert_eq!(r.from_int(-1), Elem(3));
        assert_eq!(r.from_int(9), Elem(1));
    }
}
