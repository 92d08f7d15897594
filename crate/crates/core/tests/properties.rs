use std::sync::Arc;

use proptest::prelude::*;

use formring::algebra::{identity, mat_mul};
use formring::form_param::enumerate_form_params;
use formring::poly::{Poly, PolyRing, Subst};
use formring::quad::{all_generators, gq_inverse, is_in_gq, stab_embed, FormRing, GenMode, Slot};
use formring::ring::{localize_at, Elem, RingCtx};
use formring::word::{inverse, word_eval, Letter, Word};

const SPECS: [&str; 5] = [
    "GF 2, trivial, lambda=1",
    "GF 3, trivial, lambda=-1",
    "Zmod 4, trivial, lambda=-1",
    "Zmod 6, trivial, lambda=-1",
    "GaussMod 3, conj, lambda=i",
];

fn form_rings() -> Vec<Arc<FormRing>> {
    SPECS
        .iter()
        .flat_map(|s| {
            let r = RingCtx::parse(s).unwrap();
            enumerate_form_params(&r, 100).unwrap().into_iter().map(|fp| FormRing::new(fp, GenMode::Strict))
        })
        .collect()
}

fn word_from(fr: &FormRing, n: usize, picks: &[usize]) -> Word<Elem> {
    let gens = all_generators(fr, n);
    if gens.is_empty() {
        return Word::empty(n);
    }
    Word::from_letters(
        n,
        picks.iter().map(|&k| {
            let (fam, i, j, a) = gens[k % gens.len()];
            Letter::new(fam, i, j, a)
        }),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn gq_is_a_group(ring in 0usize..64, n in 1usize..=3, a in prop::collection::vec(any::<usize>(), 0..10), b in prop::collection::vec(any::<usize>(), 0..10)) {
        let frs = form_rings();
        let fr = &frs[ring % frs.len()];
        let r = &*fr.ring;
        let x = word_eval(&fr.ring, &word_from(fr, n, &a));
        let y = word_eval(&fr.ring, &word_from(fr, n, &b));
        prop_assert!(is_in_gq(fr, &x));
        prop_assert!(is_in_gq(fr, &mat_mul(r, &x, &y)));
        let xi = gq_inverse(r, &x);
        prop_assert!(is_in_gq(fr, &xi));
        prop_assert_eq!(mat_mul(r, &xi, &x), identity(r, 2 * n));
        prop_assert_eq!(word_eval(&fr.ring, &inverse(&fr.ring, &word_from(fr, n, &a))), xi);
    }

    #[test]
    fn stab_embed_is_a_homomorphism(ring in 0usize..64, n in 1usize..=2, slot in 0usize..3, a in prop::collection::vec(any::<usize>(), 0..8), b in prop::collection::vec(any::<usize>(), 0..8)) {
        let frs = form_rings();
        let fr = &frs[ring % frs.len()];
        let r = &*fr.ring;
        let slot = [Slot::Outer, Slot::Mid, Slot::Inner][slot];
        let x = word_eval(&fr.ring, &word_from(fr, n, &a));
        let y = word_eval(&fr.ring, &word_from(fr, n, &b));
        let xy = stab_embed(r, &mat_mul(r, &x, &y), slot);
        prop_assert_eq!(&xy, &mat_mul(r, &stab_embed(r, &x, slot), &stab_embed(r, &y, slot)));
        prop_assert!(is_in_gq(fr, &xy));
    }

    #[test]
    fn substitution_is_multiplicative(coeffs in prop::collection::vec(0u16..6, 4..12), c in 0u16..6, e in 0u32..3) {
        let r = RingCtx::parse("Zmod 6, trivial, lambda=-1").unwrap();
        let fr = FormRing::new(formring::form_param::lambda_max(&r), GenMode::Strict);
        let pr = PolyRing::new(&r);
        let gens = all_generators(&fr, 2);
        let letters: Vec<Letter<Poly>> = coeffs.chunks(2).enumerate().map(|(k, ch)| {
            let (fam, i, j, _) = gens[(k * 7 + ch[0] as usize) % gens.len()];
            let p = Poly::from_coeffs(&ch.iter().map(|&x| Elem(x)).collect::<Vec<_>>());
            let p = if fam != formring::quad::Family::Eps && i == j { pr.scale(Elem(0), &p) } else { p };
            Letter::new(fam, i, j, p)
        }).collect();
        let (left, right) = letters.split_at(letters.len() / 2);
        let a = word_eval(&pr, &Word::from_letters(2, left.to_vec()));
        let b = word_eval(&pr, &Word::from_letters(2, right.to_vec()));
        let s = Subst { x: pr.scale(Elem(c), &pr.pow(&pr.x(), e + 1)), t: pr.t(), u: pr.u() };
        prop_assert_eq!(pr.subst_mat(&mat_mul(&pr, &a, &b), &s), mat_mul(&pr, &pr.subst_mat(&a, &s), &pr.subst_mat(&b, &s)));
    }

    #[test]
    fn localization_is_a_ring_map(x in 0u16..12, y in 0u16..12, s in prop::sample::select(vec![1u16, 2, 3, 5, 7])) {
        let r = RingCtx::parse("Zmod 12, trivial, lambda=-1").unwrap();
        let loc = localize_at(&r, Elem(s)).unwrap();
        let t = &loc.target;
        let (x, y) = (Elem(x), Elem(y));
        prop_assert_eq!(loc.apply(r.add_e(x, y)), t.add_e(loc.apply(x), loc.apply(y)));
        prop_assert_eq!(loc.apply(r.mul_e(x, y)), t.mul_e(loc.apply(x), loc.apply(y)));
        prop_assert_eq!(loc.apply(loc.lift(loc.apply(x))), loc.apply(x));
        prop_assert!(t.is_unit(loc.apply(Elem(s))));
    }

    #[test]
    fn form_parameters_are_stable(ring in 0usize..64, x in 0u16..9) {
        let frs = form_rings();
        let fr = &frs[ring % frs.len()];
        let r = &fr.ring;
        let x = Elem(x % r.size() as u16);
        for a in fr.lambda.elements() {
            prop_assert!(fr.lambda.contains(r.mul_e(r.mul_e(r.conj_e(x), a), x)));
            prop_assert!(fr.lambda.contains(r.neg_e(a)));
        }
    }
}
