//! Form parameters: additive subgroups `Lambda` with
//! `Lambda_min <= Lambda <= Lambda_max` closed under `a -> conj(x) a x`.

use std::collections::BTreeMap;
use std::sync::Arc;

use rustc_hash::FxHashSet;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::{Mono, Poly};
use crate::ring::{label_text, parse_element, Elem, LocalizationMap, RingCtx};

#[derive(Clone, Debug)]
pub struct FormParam {
    ring: Arc<RingCtx>,
    gens: Vec<Elem>,
    members: Vec<bool>,
}

impl PartialEq for FormParam {
    fn eq(&self, other: &Self) -> bool {
        self.members == other.members
    }
}

impl Eq for FormParam {}

impl FormParam {
    pub fn ring(&self) -> &Arc<RingCtx> {
        &self.ring
    }

    pub fn gens(&self) -> &[Elem] {
        &self.gens
    }

    pub fn contains(&self, a: Elem) -> bool {
        self.members[a.idx()]
    }

    pub fn elements(&self) -> Vec<Elem> {
        self.ring.elements().filter(|&a| self.contains(a)).collect()
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_max(&self) -> bool {
        *self == lambda_max(&self.ring)
    }

    pub fn coset(&self, a: Elem) -> LambdaCoset {
        let rep = self.ring.elements().filter(|&x| self.contains(x)).map(|x| self.ring.add_e(a, x)).min().unwrap();
        LambdaCoset { rep }
    }

    /// Short human-readable tag: `min`, `max`, or the element list.
    pub fn describe(&self) -> String {
        if *self == lambda_max(&self.ring) {
            "max".into()
        } else if *self == lambda_min(&self.ring) {
            "min".into()
        } else {
            let items: Vec<String> = self.elements().iter().map(|&a| label_text(self.ring.label(a))).collect();
            format!("{{{}}}", items.join(","))
        }
    }

    /// Odd part used for `Lambda[X]`: the span of `Lambda_min` and
    /// `g (y + conj y)` for `g` in `Lambda`, closed under conjugation action.
    pub fn odd_part(&self) -> Vec<bool> {
        let r = &self.ring;
        let mut extra: Vec<Elem> = Vec::new();
        for g in self.elements() {
            for y in r.elements() {
                extra.push(r.mul_e(g, r.add_e(y, r.conj_e(y))));
            }
        }
        closure_set(r, &extra)
    }
}

/// A class in `R / Lambda`, represented by its least element.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct LambdaCoset {
    pub rep: Elem,
}

impl LambdaCoset {
    pub fn is_zero(&self) -> bool {
        self.rep == Elem(0)
    }
}

fn min_gens(r: &RingCtx) -> Vec<Elem> {
    r.elements().map(|a| r.sub_e(a, r.mul_e(r.lambda_el(), r.conj_e(a)))).collect()
}

pub fn in_lambda_max(r: &RingCtx, a: Elem) -> bool {
    a == r.neg_e(r.mul_e(r.lambda_el(), r.conj_e(a)))
}

pub fn lambda_min(r: &Arc<RingCtx>) -> FormParam {
    let members = closure_set(r, &[]);
    FormParam { ring: r.clone(), gens: Vec::new(), members }
}

pub fn lambda_max(r: &Arc<RingCtx>) -> FormParam {
    let members: Vec<bool> = r.elements().map(|a| in_lambda_max(r, a)).collect();
    let gens = r.elements().filter(|&a| members[a.idx()]).collect();
    FormParam { ring: r.clone(), gens, members }
}

/// `min`, `max` or `gens:[...]` with elements in JSON notation.
pub fn parse_form_param(r: &Arc<RingCtx>, text: &str) -> Result<FormParam> {
    let t = text.trim();
    match t {
        "min" => Ok(lambda_min(r)),
        "max" => Ok(lambda_max(r)),
        _ => {
            let list =
                t.strip_prefix("gens:").ok_or_else(|| Error::Parse(format!("form parameter `{t}`: expected min, max or gens:[...]")))?;
            let v: serde_json::Value = serde_json::from_str(list.trim()).map_err(|e| Error::Parse(format!("form parameter `{t}`: {e}")))?;
            let items = v.as_array().ok_or_else(|| Error::Parse(format!("form parameter `{t}`: gens must be a list")))?;
            let gens = items.iter().map(|x| parse_element(r, x)).collect::<Result<Vec<_>>>()?;
            form_param_closure(r, &gens)
        }
    }
}

/// Smallest form parameter containing `gens`.
pub fn form_param_closure(r: &Arc<RingCtx>, gens: &[Elem]) -> Result<FormParam> {
    if let Some(&bad) = gens.iter().find(|&&g| !in_lambda_max(r, g)) {
        return Err(Error::GeneratorOutsideLambdaMax(label_text(r.label(bad))));
    }
    Ok(FormParam { ring: r.clone(), gens: gens.to_vec(), members: closure_set(r, gens) })
}

/// Fixed point of: add `Lambda_min`, take additive span, apply `conj(x) a x`.
fn closure_set(r: &RingCtx, gens: &[Elem]) -> Vec<bool> {
    let mut seeds: Vec<Elem> = min_gens(r);
    seeds.extend_from_slice(gens);
    loop {
        let members = crate::ring::additive_span_of(r, &seeds);
        let mut grew = false;
        let current: Vec<Elem> = r.elements().filter(|a| members[a.idx()]).collect();
        for &a in &current {
            for x in r.elements() {
                let y = r.mul_e(r.mul_e(r.conj_e(x), a), x);
                if !members[y.idx()] {
                    seeds.push(y);
                    grew = true;
                }
            }
        }
        if !grew {
            return members;
        }
    }
}

/// All form parameters of `r`, ordered by size then by element set.
pub fn enumerate_form_params(r: &Arc<RingCtx>, cap: usize) -> Result<Vec<FormParam>> {
    let max = lambda_max(r);
    let start = lambda_min(r);
    let mut seen: FxHashSet<Vec<bool>> = FxHashSet::default();
    seen.insert(start.members.clone());
    let mut out = vec![start];
    let mut i = 0;
    while i < out.len() {
        let cur = out[i].clone();
        for g in max.elements() {
            if cur.contains(g) {
                continue;
            }
            let mut gens = cur.gens.clone();
            gens.push(g);
            let next = form_param_closure(r, &gens)?;
            if seen.insert(next.members.clone()) {
                out.push(next);
                if out.len() > cap {
                    return Err(Error::CapExceeded { cap });
                }
            }
        }
        i += 1;
    }
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.elements().cmp(&b.elements())));
    Ok(out)
}

/// `Lambda_s`: the closure of the image of `lambda` in the localization.
pub fn induce_localized(lambda: &FormParam, loc: &LocalizationMap) -> FormParam {
    let image: Vec<Elem> = lambda.elements().iter().map(|&a| loc.apply(a)).collect();
    form_param_closure(&loc.target, &image).expect("image of a form parameter lies in Lambda_max")
}

#[derive(Clone, Debug, Serialize)]
pub struct PolyMembership {
    pub member: bool,
    pub degree_bound: u32,
    /// Monomials whose coefficient fails the test, as `(x, t)` exponents.
    pub failing: Vec<(u32, u32)>,
}

/// Truncated closure of `Lambda` inside `R[X,T]` up to degree `bound` in each
/// variable, as one additive subgroup of `R` per monomial.
///
/// Conjugation by `x = sum c_k m_k` sends `a m` to terms `conj(c) a c m m_k^2`
/// and `a (y + conj y) m m_k m_l` with `k != l`, so the closure decomposes
/// monomial by monomial and the fixed point is computed on that table.
pub fn poly_param_table(lambda: &FormParam, bound: u32) -> BTreeMap<Mono, Vec<bool>> {
    let r = &lambda.ring;
    let mut slots: BTreeMap<Mono, Vec<bool>> = BTreeMap::new();
    let monos: Vec<Mono> = (0..=bound).flat_map(|x| (0..=bound).map(move |t| Mono::new(x, t, 0))).collect();
    for &m in &monos {
        let base = if m == Mono::default() { lambda.members.clone() } else { closure_set(r, &[]) };
        slots.insert(m, base);
    }
    loop {
        let mut grew = false;
        for &m in &monos {
            let mut add: Vec<Elem> = Vec::new();
            for &src in &monos {
                if src.x > m.x || src.t > m.t || src == m {
                    continue;
                }
                let (dx, dt) = (m.x - src.x, m.t - src.t);
                let diagonal = dx % 2 == 0 && dt % 2 == 0;
                for a in r.elements().filter(|a| slots[&src][a.idx()]) {
                    if diagonal {
                        for c in r.elements() {
                            add.push(r.mul_e(r.mul_e(r.conj_e(c), a), c));
                        }
                    }
                    for y in r.elements() {
                        add.push(r.mul_e(a, r.add_e(y, r.conj_e(y))));
                    }
                }
            }
            let cur = &slots[&m];
            if add.iter().any(|a| !cur[a.idx()]) {
                let mut seeds: Vec<Elem> = r.elements().filter(|a| cur[a.idx()]).collect();
                seeds.extend(add);
                let next = closure_set(r, &seeds);
                slots.insert(m, next);
                grew = true;
            }
        }
        if !grew {
            return slots;
        }
    }
}

/// Decide `p in Lambda[X]` within the degree-`bound` truncation.
pub fn poly_param_member(lambda: &FormParam, p: &Poly, bound: u32) -> PolyMembership {
    let bound = bound.max(p.deg_x()).max(p.deg_t());
    let table = poly_param_table(lambda, bound);
    let failing: Vec<(u32, u32)> = p.terms().iter().filter(|(m, c)| !table[m][c.idx()]).map(|(m, _)| (m.x, m.t)).collect();
    PolyMembership { member: failing.is_empty(), degree_bound: bound, failing }
}

/// Fast form of [`poly_param_member`] using the closed description of the
/// table: monomials with all exponents even carry `Lambda`, all others its
/// odd part. Also valid with the auxiliary variable `U`.
pub fn poly_param_contains(lambda: &FormParam, odd: &[bool], p: &Poly) -> bool {
    p.terms().iter().all(|(m, c)| if m.x % 2 == 0 && m.t % 2 == 0 && m.u % 2 == 0 { lambda.contains(*c) } else { odd[c.idx()] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::localize_at;

    fn ring(s: &str) -> Arc<RingCtx> {
        RingCtx::parse(s).unwrap()
    }

    fn els(v: &[u16]) -> Vec<Elem> {
        v.iter().map(|&i| Elem(i)).collect()
    }

    #[test]
    fn parse_specs() {
        let r = ring("Zmod 6, trivial, lambda=1");
        assert_eq!(parse_form_param(&r, "min").unwrap().elements(), els(&[0]));
        assert_eq!(parse_form_param(&r, "max").unwrap().elements(), els(&[0, 3]));
        assert_eq!(parse_form_param(&r, "gens:[3]").unwrap().elements(), els(&[0, 3]));
        assert!(matches!(parse_form_param(&r, "gens:[1]"), Err(Error::GeneratorOutsideLambdaMax(_))));
        assert!(matches!(parse_form_param(&r, "all"), Err(Error::Parse(_))));
    }

    #[test]
    fn bounds_over_z6() {
        let r = ring("Zmod 6, trivial, lambda=-1");
        assert_eq!(lambda_min(&r).elements(), els(&[0, 2, 4]));
        assert_eq!(lambda_max(&r).elements(), els(&[0, 1, 2, 3, 4, 5]));
        let r = ring("Zmod 6, trivial, lambda=1");
        assert_eq!(lambda_min(&r).elements(), els(&[0]));
        assert_eq!(lambda_max(&r).elements(), els(&[0, 3]));
        let f4 = ring("PolyQuot Zmod 2 x^2+x+1, trivial, lambda=1");
        assert_eq!(lambda_min(&f4).len(), 1);
        assert_eq!(lambda_max(&f4).len(), 4);
    }

    #[test]
    fn trivial_involution_oracle() {
        // lambda = -1: min = 2R, max = R; lambda = 1: min = 0, max = {2a = 0}
        for n in [2u32, 3, 4, 6, 8, 9, 12] {
            let r = ring(&format!("Zmod {n}, trivial, lambda=-1"));
            let two_r: Vec<Elem> = r.elements().filter(|&a| r.elements().any(|x| r.add_e(x, x) == a)).collect();
            assert_eq!(lambda_min(&r).elements(), two_r);
            assert_eq!(lambda_max(&r).len(), r.size());
            let r = ring(&format!("Zmod {n}, trivial, lambda=1"));
            assert_eq!(lambda_min(&r).elements(), els(&[0]));
            let two_torsion: Vec<Elem> = r.elements().filter(|&a| r.add_e(a, a) == Elem(0)).collect();
            assert_eq!(lambda_max(&r).elements(), two_torsion);
        }
    }

    #[test]
    fn closure_examples() {
        let r = ring("Zmod 6, trivial, lambda=1");
        assert_eq!(form_param_closure(&r, &[]).unwrap().elements(), els(&[0]));
        assert_eq!(form_param_closure(&r, &els(&[3])).unwrap().elements(), els(&[0, 3]));
        assert!(matches!(form_param_closure(&r, &els(&[1])), Err(Error::GeneratorOutsideLambdaMax(_))));
        let r = ring("Zmod 6, trivial, lambda=-1");
        assert_eq!(form_param_closure(&r, &els(&[1])).unwrap().len(), 6);
    }

    #[test]
    fn enumeration_examples() {
        let list = |s: &str| -> Vec<Vec<Elem>> { enumerate_form_params(&ring(s), 1000).unwrap().iter().map(|p| p.elements()).collect() };
        assert_eq!(list("GF 2, trivial, lambda=1"), vec![els(&[0]), els(&[0, 1])]);
        assert_eq!(list("Zmod 6, trivial, lambda=1"), vec![els(&[0]), els(&[0, 3])]);
        assert_eq!(list("Zmod 6, trivial, lambda=-1"), vec![els(&[0, 2, 4]), els(&[0, 1, 2, 3, 4, 5])]);
    }

    #[test]
    fn bounds_are_closed_under_conjugation() {
        for s in ["GaussMod 3, conj, lambda=1", "GaussMod 3, conj, lambda=i", "Zmod 12, trivial, lambda=-1", "GaussMod 2, conj, lambda=1"] {
            let r = ring(s);
            for p in [lambda_min(&r), lambda_max(&r)] {
                for a in p.elements() {
                    for x in r.elements() {
                        assert!(p.contains(r.mul_e(r.mul_e(r.conj_e(x), a), x)));
                    }
                }
            }
            for p in enumerate_form_params(&r, 1000).unwrap() {
                assert_eq!(form_param_closure(&r, &p.elements()).unwrap(), p);
            }
        }
    }

    #[test]
    fn localized_params() {
        let r = ring("Zmod 6, trivial, lambda=1");
        let lam = form_param_closure(&r, &els(&[3])).unwrap();
        let loc = localize_at(&r, Elem(3)).unwrap();
        assert_eq!(induce_localized(&lam, &loc).len(), 2);
        let loc1 = localize_at(&r, Elem(1)).unwrap();
        assert_eq!(induce_localized(&lam, &loc1).elements(), lam.elements());
        let r = ring("Zmod 12, trivial, lambda=-1");
        let loc = localize_at(&r, Elem(2)).unwrap();
        assert_eq!(induce_localized(&lambda_min(&r), &loc), lambda_min(&loc.target));
    }

    #[test]
    fn poly_membership_examples() {
        let r = ring("Zmod 6, trivial, lambda=-1");
        let lam = lambda_min(&r);
        assert!(poly_param_member(&lam, &Poly::constant(Elem(2)), 0).member);
        assert!(poly_param_member(&lam, &Poly::from_coeffs(&els(&[0, 2])), 4).member);
        let r = ring("Zmod 6, trivial, lambda=1");
        let lam = lambda_min(&r);
        let m = poly_param_member(&lam, &Poly::from_coeffs(&els(&[0, 3])), 4);
        assert!(!m.member);
        assert_eq!(m.degree_bound, 4);
    }

    #[test]
    fn truncated_closure_matches_parity_description() {
        for s in ["Zmod 6, trivial, lambda=1", "Zmod 4, trivial, lambda=1", "GaussMod 3, conj, lambda=1", "GF 2, trivial, lambda=1"] {
            let r = ring(s);
            for lam in enumerate_form_params(&r, 100).unwrap() {
                let odd = lam.odd_part();
                let table = poly_param_table(&lam, 3);
                for (m, slot) in &table {
                    let expected: Vec<bool> = if m.x % 2 == 0 && m.t % 2 == 0 { lam.members.clone() } else { odd.clone() };
                    assert_eq!(slot, &expected, "{s} {m:?}");
                }
                // monotone in the bound
                let small = poly_param_table(&lam, 2);
                for (m, slot) in &small {
                    assert_eq!(slot, &table[m]);
                }
            }
        }
    }

    #[test]
    fn cosets_use_least_representative() {
        let r = ring("Zmod 6, trivial, lambda=-1");
        let lam = lambda_min(&r);
        assert_eq!(lam.coset(Elem(5)).rep, Elem(1));
        assert!(lam.coset(Elem(4)).is_zero());
    }
}
