//! Suslin's trick, dilation and local-global gluing of elementary
//! factorizations over polynomial rings.
//!
//! Localizations of finite rings are corner rings `R e`, so "clearing
//! denominators" amounts to choosing preimages. The auxiliary variable `U`
//! keeps track of the powers of `s` each parameter can absorb: a local word
//! is rewritten so that every letter is divisible by `U`, lifted to `R`,
//! and `U` is specialized to `s^m`.

use std::collections::HashMap;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::algebra::{identity, mat_mul, Mat, Ring};
use crate::error::{Error, Result};
use crate::form_param::induce_localized;
use crate::poly::{Mono, Poly, PolyRing, Subst, Var};
use crate::quad::{gq_inverse, is_in_gq, FormRing};
use crate::relations::{RelationTable, Rewriter};
use crate::ring::{localize_at, partition_of_unity, Elem, LocalizationMap, RingCtx};
use crate::word::{congruence_normalize, flatten, inverse, subst_word, validate_poly_word, word_eval, Item, Letter, Word};

/// Degree cap for the polynomial rings used while dilating and gluing.
pub const GLUE_DEGREE_CAP: u32 = 4096;

/// A random word of at most `len` letters over `R[X]` with linear
/// parameters, of the form `w w(0)^{-1}` so that it evaluates to `I` at 0.
pub fn random_instance(fr: &FormRing, n: usize, len: usize, rng: &mut ChaCha8Rng) -> Word<Poly> {
    let r = &fr.ring;
    let pr = PolyRing::new(r);
    let shapes = crate::relations::Shape::all(n);
    let mut w = Word::empty(n);
    while w.items.len() < (len / 2).max(1) {
        let s = shapes[rng.random_range(0..shapes.len())];
        let coeffs: Vec<Elem> = (0..2).map(|_| Elem(rng.random_range(0..r.size() as u16))).collect();
        let l = Letter::new(s.fam, s.i, s.j, Poly::from_coeffs(&coeffs));
        if !l.is_diagonal() || fr.diag_ok_poly(l.fam, &l.param) {
            w.push(l);
        }
    }
    let at0 = subst_word(&pr, &w, &subst_of(&pr, Poly::zero(), pr.t()));
    let tail: Vec<Letter<Poly>> = flatten(&pr, &inverse(&pr, &at0)).into_iter().filter(|l| !l.param.is_zero()).collect();
    w.concat(&Word::from_letters(n, tail))
}

#[derive(Copy, Clone, Debug)]
pub struct DilateOptions {
    pub cap: u32,
    /// Largest `log2 d` tried for `X -> X U^d`.
    pub max_log_d: u32,
}

impl Default for DilateOptions {
    fn default() -> Self {
        DilateOptions { cap: GLUE_DEGREE_CAP, max_log_d: 10 }
    }
}

pub fn loc_poly(loc: &LocalizationMap, p: &Poly) -> Poly {
    p.map_coeffs(|c| loc.apply(c))
}

pub fn loc_mat(loc: &LocalizationMap, a: &Mat<Poly>) -> Mat<Poly> {
    a.map(|p| loc_poly(loc, p))
}

pub fn loc_word(loc: &LocalizationMap, w: &Word<Poly>) -> Word<Poly> {
    w.map_params(&|l: &Letter<Poly>| loc_poly(loc, &l.param))
}

fn subst_of(pr: &PolyRing, x: Poly, t: Poly) -> Subst {
    Subst { x, t, u: pr.u() }
}

fn at_x_zero(pr: &PolyRing, a: &Mat<Poly>) -> Mat<Poly> {
    pr.subst_mat(a, &subst_of(pr, Poly::zero(), pr.t()))
}

/// `theta(X, T) = alpha(X + T) alpha(T)^{-1}` for `alpha` over `R[X]` in
/// the group with `alpha(0) = I`.
pub fn suslin_theta(pr: &PolyRing, alpha: &Mat<Poly>) -> Result<Mat<Poly>> {
    if at_x_zero(pr, alpha) != identity(pr, alpha.dim) {
        return Err(Error::NotNormalizedAtZero);
    }
    let shifted = pr.subst_mat(alpha, &subst_of(pr, pr.add(&pr.x(), &pr.t()), pr.t()));
    let at_t = pr.subst_mat(alpha, &subst_of(pr, pr.t(), pr.t()));
    let inv = gq_inverse(pr, &at_t);
    if mat_mul(pr, &at_t, &inv) != identity(pr, alpha.dim) {
        return Err(Error::NotInvertible);
    }
    let theta = mat_mul(pr, &shifted, &inv);
    pr.check_overflow()?;
    Ok(theta)
}

/// The same construction on a word: `w(X + T) w(T)^{-1}`.
pub fn suslin_theta_word(pr: &PolyRing, w: &Word<Poly>) -> Word<Poly> {
    let shifted = subst_word(pr, w, &subst_of(pr, pr.add(&pr.x(), &pr.t()), pr.t()));
    let at_t = subst_word(pr, w, &subst_of(pr, pr.t(), pr.t()));
    shifted.concat(&inverse(pr, &at_t))
}

#[derive(Clone, Debug)]
pub struct Dilation {
    /// `b = s^l`.
    pub b: Elem,
    pub l: u32,
    /// `U -> s^m U`, with `m` the stable exponent of `s`.
    pub m: u32,
    /// `X -> X U^d`.
    pub d: u32,
    /// A word over `R[X]` (or `R[X,T]`) of plain letters.
    pub beta: Word<Poly>,
    /// Whether `beta` evaluates to `alpha(bX)` over `R` itself and not just
    /// after localization.
    pub exact: bool,
}

impl Dilation {
    pub fn to_json(&self, r: &RingCtx) -> Value {
        serde_json::json!({
            "b": r.label(self.b),
            "l": self.l,
            "m": self.m,
            "d": self.d,
            "exact": self.exact,
            "beta": crate::word::poly_word_to_json(r, &self.beta),
            "letters": self.beta.letter_count(),
        })
    }
}

/// Preimage of one letter: coefficient `y` of `U^j` becomes `z s^{m j}`
/// with `loc(z) = y`, and `U` is set to 1. Diagonal letters take their
/// preimages inside the form parameter.
fn lift_letter(fr: &FormRing, pr: &PolyRing, loc: &LocalizationMap, m: u32, l: &Letter<Poly>) -> Result<Letter<Poly>> {
    let r = &loc.source;
    let sm = r.pow(loc.s, m);
    let mut acc = Poly::zero();
    for &(mono, y) in l.param.terms() {
        let scale = r.pow(sm, mono.u);
        let target = Mono::new(mono.x, mono.t, 0);
        let z = if l.is_diagonal() {
            r.elements()
                .find(|&z| loc.apply(z) == y && fr.diag_ok_poly(l.fam, &Poly::term(r.mul_e(z, scale), target)))
                .ok_or_else(|| Error::VerificationFailed(format!("no admissible preimage for a {} coefficient", l.fam.name())))?
        } else {
            loc.lift(y)
        };
        acc = pr.add(&acc, &Poly::term(r.mul_e(z, scale), target));
    }
    Ok(l.with_param(acc))
}

/// Rewrite a normalized word with every letter divisible by `U`, trying
/// `X -> X U^d` for `d = 1, 2, 4, ...`.
fn rewrite_divisible(rw: &Rewriter<'_>, normalized: &Word<Poly>, max_log_d: u32) -> Result<(u32, Vec<Letter<Poly>>)> {
    let pr = rw.pr;
    let mut last = Error::UnresolvedRelation("empty search".into());
    for e in 0..=max_log_d {
        let d = 1u32 << e;
        let sub = subst_of(pr, pr.mul(&pr.x(), &pr.pow(&pr.u(), d)), pr.t());
        let mut out = Vec::new();
        let mut failed = None;
        for it in &normalized.items {
            let (conj, inner) = match it {
                Item::Conj { conj, inner } => (flatten(pr, conj), flatten(pr, inner)),
                Item::Gen(l) => (vec![], vec![l.clone()]),
            };
            let inner: Vec<Letter<Poly>> = inner.iter().map(|l| l.with_param(pr.subst(&l.param, &sub))).collect();
            match rw.conjugate_by_word(&conj, inner, 1) {
                Ok(ls) => out.extend(ls),
                Err(err) => {
                    failed = Some(err);
                    break;
                }
            }
        }
        pr.check_overflow()?;
        match failed {
            None => return Ok((d, out)),
            Some(err) => last = err,
        }
    }
    Err(last)
}

/// Dilation: from a factorization of `alpha_s` over `R_s[X]` build
/// `beta` over `R[X]` with `beta(0) = I` and `beta_s(X) = alpha_s(bX)`,
/// `b = s^l`. `alpha` may also involve `T`, which is treated as part of
/// the base.
pub fn dilate(
    fr: &FormRing,
    table: &RelationTable,
    alpha: &Mat<Poly>,
    loc: &LocalizationMap,
    local_word: &Word<Poly>,
    opts: DilateOptions,
) -> Result<Dilation> {
    let r = &fr.ring;
    if r.conj_e(loc.s) != loc.s {
        return Err(Error::InvolutionIncompatible(format!(
            "U -> s^m U with conj(s) != s for s = {}",
            crate::ring::label_text(r.label(loc.s))
        )));
    }
    let n = alpha.dim / 2;
    let pr = PolyRing::with_cap(r, opts.cap);
    if at_x_zero(&pr, alpha) != identity(&pr, alpha.dim) {
        return Err(Error::NotNormalizedAtZero);
    }
    let prs = PolyRing::with_cap(&loc.target, opts.cap);
    if word_eval(&prs, local_word) != loc_mat(loc, alpha) {
        return Err(Error::PreconditionViolated("local word does not evaluate to the localization of alpha".into()));
    }
    let frs = FormRing::new(induce_localized(&fr.lambda, loc), fr.mode);
    let normalized = congruence_normalize(&prs, local_word, Var::X)?;
    let rw = Rewriter { table, fr: &frs, pr: &prs, n, var: Var::U };
    let (d, letters) = rewrite_divisible(&rw, &normalized, opts.max_log_d)?;

    let m = loc.k;
    let lifted: Vec<Letter<Poly>> = letters
        .iter()
        .map(|l| lift_letter(fr, &pr, loc, m, l))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|l| !l.param.is_zero())
        .collect();
    let beta = Word::from_letters(n, lifted);
    let l = m * d;
    let b = r.pow(loc.s, l);

    validate_poly_word(fr, &pr, &beta)?;
    let value = word_eval(&pr, &beta);
    let target = pr.subst_mat(alpha, &subst_of(&pr, pr.scale(b, &pr.x()), pr.t()));
    pr.check_overflow()?;
    if at_x_zero(&pr, &value) != identity(&pr, alpha.dim) {
        return Err(Error::VerificationFailed("beta(0) != I".into()));
    }
    if loc_mat(loc, &value) != loc_mat(loc, &target) {
        return Err(Error::VerificationFailed("beta_s(X) != alpha_s(bX)".into()));
    }
    Ok(Dilation { b, l, m, d, exact: value == target, beta })
}

#[derive(Clone, Debug)]
pub struct GlueResult {
    pub word: Word<Poly>,
    /// `b_i` with `sum b_i = 1`, `b_i in (s_i^l)`.
    pub parts: Vec<Elem>,
    pub exponent: u32,
    pub dilations: Vec<Dilation>,
}

impl GlueResult {
    pub fn to_json(&self, r: &RingCtx) -> Value {
        serde_json::json!({
            "parts": self.parts.iter().map(|&b| r.label(b).clone()).collect::<Vec<_>>(),
            "exponent": self.exponent,
            "dilations": self.dilations.iter().map(|d| serde_json::json!({"l": d.l, "m": d.m, "d": d.d, "letters": d.beta.letter_count()})).collect::<Vec<_>>(),
            "letters": self.word.letter_count(),
            "word": crate::word::poly_word_to_json(r, &self.word),
        })
    }
}

/// Assemble an elementary factorization of `alpha(X)` over `R[X]` from
/// factorizations over the localizations `R_{s_i}[X]` at a cover.
///
/// `alpha(X) = prod_i theta_i(b_i X, T)|_{T = (b_{i+1} + ... + b_r) X}`,
/// each factor obtained by dilating `theta_i` over `R[T][X]`. The output
/// is checked to evaluate to `alpha` exactly.
pub fn local_global_glue(
    fr: &FormRing,
    table: &RelationTable,
    alpha: &Mat<Poly>,
    cover: &[(Elem, Word<Poly>)],
    opts: DilateOptions,
) -> Result<GlueResult> {
    let r = &fr.ring;
    let n = alpha.dim / 2;
    let pr = PolyRing::with_cap(r, opts.cap);
    if at_x_zero(&pr, alpha) != identity(&pr, alpha.dim) {
        return Err(Error::NotNormalizedAtZero);
    }
    let s_list: Vec<Elem> = cover.iter().map(|(s, _)| *s).collect();
    partition_of_unity(r, &s_list, 1)?;

    if let [(s, w)] = cover {
        if r.is_unit(*s) {
            let loc = localize_at(r, *s)?;
            let word = w.map_params(&|l: &Letter<Poly>| l.param.map_coeffs(|c| loc.lift(c)));
            if word_eval(&pr, &word) != *alpha {
                return Err(Error::VerificationFailed("local word does not evaluate to alpha".into()));
            }
            return Ok(GlueResult { word, parts: vec![r.one_el()], exponent: 0, dilations: vec![] });
        }
    }

    let theta = {
        let shifted = pr.subst_mat(alpha, &subst_of(&pr, pr.add(&pr.x(), &pr.t()), pr.t()));
        let at_t = pr.subst_mat(alpha, &subst_of(&pr, pr.t(), pr.t()));
        mat_mul(&pr, &shifted, &gq_inverse(&pr, &at_t))
    };
    pr.check_overflow()?;

    let dilations: Vec<Dilation> = cover
        .par_iter()
        .map(|(s, w)| {
            let loc = localize_at(r, *s)?;
            let prs = PolyRing::with_cap(&loc.target, opts.cap);
            let theta_w = suslin_theta_word(&prs, w);
            dilate(fr, table, &theta, &loc, &theta_w, opts)
        })
        .collect::<Result<Vec<_>>>()?;

    let l = dilations.iter().map(|d| d.l).max().unwrap_or(0);
    let pou = partition_of_unity(r, &s_list, l)?;
    let mut word = Word::empty(n);
    for (i, dil) in dilations.iter().enumerate() {
        let scale = r.mul_e(r.pow(s_list[i], l - dil.l), pou.witnesses[i]);
        let tail = pou.parts[i + 1..].iter().fold(Elem(0), |acc, &b| r.add_e(acc, b));
        let sub = subst_of(&pr, pr.scale(scale, &pr.x()), pr.scale(tail, &pr.x()));
        let gamma = subst_word(&pr, &dil.beta, &sub);
        word.extend(&Word::from_letters(n, flatten(&pr, &gamma).into_iter().filter(|l| !l.param.is_zero())));
    }
    let value = word_eval(&pr, &word);
    pr.check_overflow()?;
    if value != *alpha {
        return Err(Error::VerificationFailed("glued word does not evaluate to alpha".into()));
    }
    Ok(GlueResult { word, parts: pou.parts, exponent: l, dilations })
}

type Rows = Vec<Vec<Value>>;

#[derive(Clone, Debug, Serialize)]
pub struct KVerdict {
    pub k: u32,
    pub injective: bool,
    pub checked: usize,
    pub exhaustive: bool,
    /// Two distinct matrices with the same localization.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<(Rows, Rows)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct InjectivityReport {
    pub ring: String,
    pub s: Value,
    pub n: usize,
    pub stable_exponent: u32,
    pub verdicts: Vec<KVerdict>,
    pub least_k: Option<u32>,
}

const EXHAUSTIVE_LIMIT: u128 = 4_000_000;

/// For `k = 0, 1, ..., stable + 1`: is `G(R, s^k R) -> G(R_s)` injective
/// on matrices of the group congruent to `I` modulo `s^k`?
pub fn check_localization_injectivity(fr: &FormRing, s: Elem, n: usize, samples: usize, seed: u64) -> Result<InjectivityReport> {
    let r = &fr.ring;
    let loc = localize_at(r, s)?;
    let dim = 2 * n;
    let mut verdicts = Vec::new();
    for k in 0..=loc.k + 1 {
        let sk = r.pow(s, k);
        let ideal: Vec<Elem> = {
            let mut v: Vec<Elem> = r.elements().map(|x| r.mul_e(sk, x)).collect();
            v.sort();
            v.dedup();
            v
        };
        let entry = |pos: usize, choice: usize| {
            let x = ideal[choice];
            if pos / dim == pos % dim {
                r.add_e(r.one_el(), x)
            } else {
                x
            }
        };
        let cells = dim * dim;
        let total = (ideal.len() as u128).checked_pow(cells as u32).unwrap_or(u128::MAX);
        let exhaustive = total <= EXHAUSTIVE_LIMIT;
        let mut seen: HashMap<Vec<Elem>, Vec<Elem>> = HashMap::new();
        let mut witness = None;
        let mut checked = 0usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ k as u64);
        let count = if exhaustive { total as usize } else { samples };
        for idx in 0..count {
            let entries: Vec<Elem> = if exhaustive {
                let mut c = idx;
                (0..cells)
                    .map(|p| {
                        let ch = c % ideal.len();
                        c /= ideal.len();
                        entry(p, ch)
                    })
                    .collect()
            } else {
                (0..cells).map(|p| entry(p, rng.random_range(0..ideal.len()))).collect()
            };
            let m = Mat { dim, entries };
            if !is_in_gq(fr, &m) {
                continue;
            }
            checked += 1;
            let image: Vec<Elem> = m.entries.iter().map(|&x| loc.apply(x)).collect();
            match seen.get(&image) {
                Some(other) if *other != m.entries => {
                    let rows = |e: &[Elem]| e.chunks(dim).map(|row| row.iter().map(|&x| r.label(x).clone()).collect()).collect();
                    witness = Some((rows(other), rows(&m.entries)));
                    break;
                }
                Some(_) => {}
                None => {
                    seen.insert(image, m.entries);
                }
            }
        }
        verdicts.push(KVerdict { k, injective: witness.is_none(), checked, exhaustive, witness });
    }
    let least_k = verdicts.iter().find(|v| v.injective).map(|v| v.k);
    Ok(InjectivityReport { ring: r.description().to_string(), s: r.label(s).clone(), n, stable_exponent: loc.k, verdicts, least_k })
}

#[cfg(test)]
mod tests {
    use std::sync::{Arc, OnceLock};

    use super::*;
    use crate::form_param::lambda_max;
    use crate::quad::{Family, GenMode};
    use crate::relations::{default_sample_rings, derive_relation_table};

    fn table() -> &'static RelationTable {
        static T: OnceLock<RelationTable> = OnceLock::new();
        T.get_or_init(|| derive_relation_table(3, &default_sample_rings(), 20, 3))
    }

    fn form_ring(spec: &str) -> Arc<FormRing> {
        FormRing::new(lambda_max(&RingCtx::parse(spec).unwrap()), GenMode::Strict)
    }

    #[test]
    fn theta_examples() {
        let fr = form_ring("Zmod 6, trivial, lambda=-1");
        let pr = PolyRing::new(&fr.ring);
        let id = identity(&pr, 4);
        assert_eq!(suslin_theta(&pr, &id).unwrap(), id);
        let a = word_eval(&pr, &Word::from_letters(2, [Letter::new(Family::Eps, 1, 2, pr.x())]));
        assert_eq!(suslin_theta(&pr, &a).unwrap(), a);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let w = random_instance(&fr, 2, 8, &mut rng);
            let alpha = word_eval(&pr, &w);
            let theta = suslin_theta(&pr, &alpha).unwrap();
            assert_eq!(pr.subst_mat(&theta, &subst_of(&pr, pr.x(), Poly::zero())), alpha);
            assert_eq!(at_x_zero(&pr, &theta), id);
            assert_eq!(word_eval(&pr, &suslin_theta_word(&pr, &w)), theta);
        }
        let shifted = word_eval(&pr, &Word::from_letters(2, [Letter::new(Family::Eps, 1, 2, Poly::constant(Elem(1)))]));
        assert_eq!(suslin_theta(&pr, &shifted), Err(Error::NotNormalizedAtZero));
    }

    #[test]
    fn dilation_over_z12() {
        let fr = form_ring("Zmod 12, trivial, lambda=-1");
        let r = &fr.ring;
        let pr = PolyRing::new(r);
        let loc = localize_at(r, Elem(2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..4 {
            let w = random_instance(&fr, 2, 6, &mut rng);
            let alpha = word_eval(&pr, &w);
            let dil = dilate(&fr, table(), &alpha, &loc, &loc_word(&loc, &w), DilateOptions::default()).unwrap();
            assert_eq!(dil.b, r.pow(Elem(2), dil.l));
            assert!(dil.l >= loc.k);
        }
        assert!(matches!(localize_at(r, Elem(6)), Err(Error::NilpotentElement(_))));
    }

    #[test]
    fn glue_round_trip_z6() {
        let fr = form_ring("Zmod 6, trivial, lambda=-1");
        let r = &fr.ring;
        let pr = PolyRing::new(r);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..3 {
            let w = random_instance(&fr, 2, 6, &mut rng);
            let alpha = word_eval(&pr, &w);
            let cover: Vec<(Elem, Word<Poly>)> =
                [Elem(2), Elem(3)].iter().map(|&s| (s, loc_word(&localize_at(r, s).unwrap(), &w))).collect();
            let g = local_global_glue(&fr, table(), &alpha, &cover, DilateOptions::default()).unwrap();
            assert_eq!(word_eval(&pr, &g.word), alpha);
        }
        let w = random_instance(&fr, 2, 6, &mut rng);
        let alpha = word_eval(&pr, &w);
        let single = local_global_glue(&fr, table(), &alpha, &[(Elem(1), w.clone())], DilateOptions::default()).unwrap();
        assert_eq!(single.word, w);
        let bad = [(Elem(2), loc_word(&localize_at(r, Elem(2)).unwrap(), &w))];
        assert_eq!(local_global_glue(&fr, table(), &alpha, &bad, DilateOptions::default()).unwrap_err(), Error::NotACover);
    }

    #[test]
    fn injectivity_probe() {
        let f5 = form_ring("GF 5, trivial, lambda=-1");
        let rep = check_localization_injectivity(&f5, Elem(2), 1, 0, 0).unwrap();
        assert_eq!(rep.least_k, Some(0));
        let rep = check_localization_injectivity(&f5, Elem(1), 1, 0, 0).unwrap();
        assert_eq!(rep.least_k, Some(0));
        // oracle: ker(Z/6 -> Z/6_2) = {0, 3} meets (2) = {0, 2, 4} trivially
        let z6 = form_ring("Zmod 6, trivial, lambda=-1");
        let rep = check_localization_injectivity(&z6, Elem(2), 1, 0, 0).unwrap();
        assert_eq!(rep.least_k, Some(1));
        assert!(!rep.verdicts[0].injective);
        // ker(Z/12 -> Z/12_2) = {0, 3, 6, 9}; (2) contains 6, (4) does not
        let z12 = form_ring("Zmod 12, trivial, lambda=-1");
        let rep = check_localization_injectivity(&z12, Elem(2), 1, 0, 0).unwrap();
        assert_eq!(rep.least_k, Some(2));
        let again = check_localization_injectivity(&z12, Elem(2), 1, 0, 0).unwrap();
        assert_eq!(serde_json::to_string(&rep).unwrap(), serde_json::to_string(&again).unwrap());
    }
}
