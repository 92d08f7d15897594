//! Formal words in elementary generators.
//!
//! A word is generic in its parameter type: `Elem` for words over the base
//! ring, `Poly` for words over `R[X]`, `R[X,T]` or `R[X,T,U]`.

use serde_json::{json, Value};

use crate::algebra::{identity, Mat, Ring};
use crate::error::{Error, Result};
use crate::poly::{Poly, PolyRing, Subst, Var};
use crate::quad::{apply_gen_left, apply_gen_right, check_indices, Family, FormRing};
use crate::ring::{label_text, Elem, RingCtx};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Letter<P> {
    pub fam: Family,
    pub i: usize,
    pub j: usize,
    pub param: P,
}

impl<P> Letter<P> {
    pub fn new(fam: Family, i: usize, j: usize, param: P) -> Letter<P> {
        Letter { fam, i, j, param }
    }

    pub fn is_diagonal(&self) -> bool {
        self.fam != Family::Eps && self.i == self.j
    }

    pub fn with_param<Q>(&self, param: Q) -> Letter<Q> {
        Letter { fam: self.fam, i: self.i, j: self.j, param }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Item<P> {
    Gen(Letter<P>),
    /// `conj * inner * conj^{-1}`.
    Conj {
        conj: Word<P>,
        inner: Word<P>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Word<P> {
    pub n: usize,
    pub items: Vec<Item<P>>,
}

impl<P: Clone> Word<P> {
    pub fn empty(n: usize) -> Word<P> {
        Word { n, items: Vec::new() }
    }

    pub fn from_letters(n: usize, letters: impl IntoIterator<Item = Letter<P>>) -> Word<P> {
        Word { n, items: letters.into_iter().map(Item::Gen).collect() }
    }

    pub fn push(&mut self, l: Letter<P>) {
        self.items.push(Item::Gen(l));
    }

    pub fn extend(&mut self, other: &Word<P>) {
        self.items.extend(other.items.iter().cloned());
    }

    pub fn concat(&self, other: &Word<P>) -> Word<P> {
        let mut w = self.clone();
        w.extend(other);
        w
    }

    /// Number of generator letters after expanding conjugations.
    pub fn letter_count(&self) -> usize {
        self.items
            .iter()
            .map(|it| match it {
                Item::Gen(_) => 1,
                Item::Conj { conj, inner } => 2 * conj.letter_count() + inner.letter_count(),
            })
            .sum()
    }

    pub fn map_params<Q: Clone>(&self, f: &impl Fn(&Letter<P>) -> Q) -> Word<Q> {
        let items = self
            .items
            .iter()
            .map(|it| match it {
                Item::Gen(l) => Item::Gen(l.with_param(f(l))),
                Item::Conj { conj, inner } => Item::Conj { conj: conj.map_params(f), inner: inner.map_params(f) },
            })
            .collect();
        Word { n: self.n, items }
    }
}

pub fn letter_inverse<R: Ring>(ring: &R, l: &Letter<R::El>) -> Letter<R::El> {
    l.with_param(ring.neg(&l.param))
}

/// Inverse word: reversed, parameters negated, conjugations kept intact.
pub fn inverse<R: Ring>(ring: &R, w: &Word<R::El>) -> Word<R::El> {
    let items = w
        .items
        .iter()
        .rev()
        .map(|it| match it {
            Item::Gen(l) => Item::Gen(letter_inverse(ring, l)),
            Item::Conj { conj, inner } => Item::Conj { conj: conj.clone(), inner: inverse(ring, inner) },
        })
        .collect();
    Word { n: w.n, items }
}

/// Expand conjugations into plain letters.
pub fn flatten<R: Ring>(ring: &R, w: &Word<R::El>) -> Vec<Letter<R::El>> {
    let mut out = Vec::new();
    flatten_into(ring, w, &mut out);
    out
}

fn flatten_into<R: Ring>(ring: &R, w: &Word<R::El>, out: &mut Vec<Letter<R::El>>) {
    for it in &w.items {
        match it {
            Item::Gen(l) => out.push(l.clone()),
            Item::Conj { conj, inner } => {
                flatten_into(ring, conj, out);
                flatten_into(ring, inner, out);
                flatten_into(ring, &inverse(ring, conj), out);
            }
        }
    }
}

pub fn letter_matrix<R: Ring>(ring: &R, n: usize, l: &Letter<R::El>) -> Mat<R::El> {
    let mut m = identity(ring, 2 * n);
    apply_gen_left(ring, &mut m, l.fam, l.i, l.j, &l.param);
    m
}

/// Product of the generator matrices, left to right.
pub fn word_eval<R: Ring>(ring: &R, w: &Word<R::El>) -> Mat<R::El> {
    let mut m = identity(ring, 2 * w.n);
    for l in flatten(ring, w) {
        apply_gen_right(ring, &mut m, l.fam, l.i, l.j, &l.param);
    }
    m
}

/// Left-multiply `m` by the word, i.e. `w * m`.
pub fn apply_word_left<R: Ring>(ring: &R, w: &Word<R::El>, m: &mut Mat<R::El>) {
    for l in flatten(ring, w).iter().rev() {
        apply_gen_left(ring, m, l.fam, l.i, l.j, &l.param);
    }
}

/// Indices and diagonal admissibility of every letter over `R`.
pub fn validate_word(fr: &FormRing, w: &Word<Elem>) -> Result<()> {
    for l in flatten(&fr.ring, w) {
        check_indices(w.n, l.fam, l.i, l.j)?;
        if l.is_diagonal() && !fr.diag_ok(l.fam, l.param) {
            return Err(Error::DiagonalParameterNotInLambda(label_text(fr.ring.label(l.param))));
        }
    }
    Ok(())
}

/// Same over a polynomial ring, using `Lambda[X,T,U]`.
pub fn validate_poly_word(fr: &FormRing, pr: &PolyRing, w: &Word<Poly>) -> Result<()> {
    for l in flatten(pr, w) {
        check_indices(w.n, l.fam, l.i, l.j)?;
        if l.is_diagonal() && !fr.diag_ok_poly(l.fam, &l.param) {
            return Err(Error::DiagonalParameterNotInLambda(pr.display(&l.param)));
        }
    }
    Ok(())
}

/// `q(f) = q(f(0)) q(f - f(0))` for a letter over `R[X]`.
pub fn split_letter(l: &Letter<Poly>) -> (Letter<Elem>, Letter<Poly>) {
    let (c, rest) = split_in(l, Var::X);
    (c.with_param(c.param.constant_term()), rest)
}

/// Split off the part of the parameter free of `v`; the first factor is
/// constant in `v`, the second congruent to the identity modulo `v`.
pub fn split_in(l: &Letter<Poly>, v: Var) -> (Letter<Poly>, Letter<Poly>) {
    (l.with_param(l.param.at_zero(v)), l.with_param(l.param.divisible_part(v)))
}

pub type WordPair<P> = (Word<P>, Word<P>);

/// `prod a_i b_i = (prod r_i b_i r_i^{-1}) (prod a_i)` with `r_i = a_1 ... a_i`.
pub fn prefix_conjugate<R: Ring>(n: usize, pairs: &[WordPair<R::El>]) -> Word<R::El> {
    let mut out = Word::empty(n);
    let mut prefix = Word::empty(n);
    for (a, b) in pairs {
        prefix.extend(a);
        if !b.items.is_empty() {
            out.items.push(Item::Conj { conj: prefix.clone(), inner: b.clone() });
        }
    }
    for (a, _) in pairs {
        out.extend(a);
    }
    out
}

/// Rewrite a word over `R[X]` (or over a base extended by further
/// variables) whose value at `v = 0` is the identity as a product of
/// conjugates `eps q(f) eps^{-1}` with `eps` free of `v` and `f` in `(v)`.
pub fn congruence_normalize(pr: &PolyRing, w: &Word<Poly>, v: Var) -> Result<Word<Poly>> {
    let zero = zero_subst(pr, v);
    let at0 = word_eval(pr, &subst_word(pr, w, &zero));
    pr.check_overflow()?;
    if at0 != identity(pr, 2 * w.n) {
        return Err(Error::NotCongruentAtZero);
    }
    let pairs: Vec<(Word<Poly>, Word<Poly>)> = flatten(pr, w)
        .iter()
        .map(|l| {
            let (c, x) = split_in(l, v);
            let a = if c.param.is_zero() { Word::empty(w.n) } else { Word::from_letters(w.n, [c]) };
            let b = if x.param.is_zero() { Word::empty(w.n) } else { Word::from_letters(w.n, [x]) };
            (a, b)
        })
        .collect();
    let full = prefix_conjugate::<PolyRing>(w.n, &pairs);
    // the trailing product of constant parts is the value at v = 0, i.e. I
    let items = full.items.into_iter().filter(|it| matches!(it, Item::Conj { .. })).collect();
    Ok(Word { n: w.n, items })
}

pub fn zero_subst(pr: &PolyRing, v: Var) -> Subst {
    let mut s = pr.identity_subst();
    match v {
        Var::X => s.x = Poly::zero(),
        Var::T => s.t = Poly::zero(),
        Var::U => s.u = Poly::zero(),
    }
    s
}

pub fn subst_word(pr: &PolyRing, w: &Word<Poly>, s: &Subst) -> Word<Poly> {
    w.map_params(&|l: &Letter<Poly>| pr.subst(&l.param, s))
}

/// Serialize a word; parameters via `param`.
pub fn word_to_json<P>(w: &Word<P>, param: &impl Fn(&P) -> Value) -> Value {
    Value::Array(
        w.items
            .iter()
            .map(|it| match it {
                Item::Gen(l) => json!({"fam": l.fam.name(), "i": l.i, "j": l.j, "param": param(&l.param)}),
                Item::Conj { conj, inner } => json!({"conj": word_to_json(conj, param), "inner": word_to_json(inner, param)}),
            })
            .collect(),
    )
}

pub fn word_from_json<P>(n: usize, v: &Value, param: &impl Fn(&Value) -> Result<P>) -> Result<Word<P>> {
    let bad = |what: &str| Error::Parse(format!("bad word item ({what}): {v}"));
    let arr = v.as_array().ok_or_else(|| bad("not an array"))?;
    let mut items = Vec::with_capacity(arr.len());
    for it in arr {
        if let Some(conj) = it.get("conj") {
            let inner = it.get("inner").ok_or_else(|| bad("missing inner"))?;
            items.push(Item::Conj { conj: word_from_json(n, conj, param)?, inner: word_from_json(n, inner, param)? });
        } else {
            let fam = Family::parse(it.get("fam").and_then(Value::as_str).ok_or_else(|| bad("fam"))?)?;
            let i = it.get("i").and_then(Value::as_u64).ok_or_else(|| bad("i"))? as usize;
            let j = it.get("j").and_then(Value::as_u64).ok_or_else(|| bad("j"))? as usize;
            check_indices(n, fam, i, j)?;
            let p = param(it.get("param").ok_or_else(|| bad("param"))?)?;
            items.push(Item::Gen(Letter::new(fam, i, j, p)));
        }
    }
    Ok(Word { n, items })
}

pub fn elem_word_to_json(r: &RingCtx, w: &Word<Elem>) -> Value {
    word_to_json(w, &|p: &Elem| r.label(*p).clone())
}

pub fn poly_word_to_json(r: &RingCtx, w: &Word<Poly>) -> Value {
    word_to_json(w, &|p: &Poly| p.to_json(r))
}

pub fn poly_word_from_json(r: &RingCtx, n: usize, v: &Value) -> Result<Word<Poly>> {
    word_from_json(n, v, &|p: &Value| Poly::from_json(r, p))
}

pub fn elem_word_from_json(r: &RingCtx, n: usize, v: &Value) -> Result<Word<Elem>> {
    word_from_json(n, v, &|p: &Value| r.parse_label(p))
}

/// Lift a word over `R` to constant polynomials.
pub fn const_word(w: &Word<Elem>) -> Word<Poly> {
    w.map_params(&|l: &Letter<Elem>| Poly::constant(l.param))
}
