use std::sync::Arc;

use serde_json::Value;

use super::{Elem, RingCtx, RingKind, RingTables};
use crate::error::{Error, Result};

/// The map `R -> R_s`, realized as `R -> R e` with `e` the idempotent
/// generating the stable ideal `(s^k) = (s^{k+1})`.
#[derive(Clone, Debug)]
pub struct LocalizationMap {
    pub source: Arc<RingCtx>,
    pub target: Arc<RingCtx>,
    pub s: Elem,
    pub k: u32,
    /// The idempotent `e`, as an element of the source.
    pub idempotent: Elem,
    image: Vec<Elem>,
    lift: Vec<Elem>,
}

impl LocalizationMap {
    pub fn apply(&self, a: Elem) -> Elem {
        self.image[a.idx()]
    }

    /// Least source element mapping to `t`.
    pub fn lift(&self, t: Elem) -> Elem {
        self.lift[t.idx()]
    }

    pub fn kernel(&self) -> Vec<Elem> {
        self.source.elements().filter(|&a| self.apply(a) == Elem(0)).collect()
    }
}

pub fn localize_at(ring: &Arc<RingCtx>, s: Elem) -> Result<LocalizationMap> {
    if ring.is_nilpotent(s) {
        return Err(Error::NilpotentElement(super::spec::label_text(ring.label(s))));
    }
    let mut k = 1u32;
    let mut cur = ring.principal(ring.pow(s, 1));
    loop {
        let next = ring.principal(ring.pow(s, k + 1));
        if next == cur {
            break;
        }
        cur = next;
        k += 1;
    }
    let sk = ring.pow(s, k);
    let e = ring
        .elements()
        .find(|&e| cur[e.idx()] && ring.mul_e(e, e) == e && ring.mul_e(e, sk) == sk)
        .expect("stable principal ideal of a finite ring is generated by an idempotent");
    if ring.conj_e(e) != e {
        return Err(Error::InvolutionNotPreserved(super::spec::label_text(ring.label(e))));
    }

    let members: Vec<Elem> = ring.elements().filter(|&a| ring.mul_e(a, e) == a).collect();
    let mut pos = vec![u16::MAX; ring.size()];
    for (i, &a) in members.iter().enumerate() {
        pos[a.idx()] = i as u16;
    }
    let n = members.len();
    let mut add = Vec::with_capacity(n * n);
    let mut mul = Vec::with_capacity(n * n);
    for &a in &members {
        for &b in &members {
            add.push(pos[ring.add_e(a, b).idx()]);
            mul.push(pos[ring.mul_e(a, b).idx()]);
        }
    }
    let neg = members.iter().map(|&a| pos[ring.neg_e(a).idx()]).collect();
    let conj = members.iter().map(|&a| pos[ring.conj_e(a).idx()]).collect();
    let labels: Vec<Value> = members.iter().map(|&a| ring.label(a).clone()).collect();
    let e_label = ring.label(e).clone();
    let lambda = Elem(pos[ring.mul_e(ring.lambda_el(), e).idx()]);
    let tables = RingTables {
        kind: RingKind::Corner { source: ring.description().to_string(), idempotent: e_label.clone() },
        involution: ring.involution(),
        labels,
        add,
        mul,
        neg,
        conj,
        one: Elem(pos[e.idx()]),
        lambda,
        description: format!("Corner({}; e={})", ring.description(), super::spec::label_text(&e_label)),
    };
    let target = Arc::new(RingCtx::from_tables(tables)?);

    let image: Vec<Elem> = ring.elements().map(|a| Elem(pos[ring.mul_e(a, e).idx()])).collect();
    let mut lift = vec![Elem(u16::MAX); n];
    for a in ring.elements() {
        let t = image[a.idx()];
        if lift[t.idx()].0 == u16::MAX {
            lift[t.idx()] = a;
        }
    }
    Ok(LocalizationMap { source: ring.clone(), target, s, k, idempotent: e, image, lift })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(s: &str) -> Arc<RingCtx> {
        RingCtx::parse(s).unwrap()
    }

    #[test]
    fn z6_examples() {
        let z6 = ring("Zmod 6, trivial, lambda=-1");
        let l = localize_at(&z6, Elem(3)).unwrap();
        assert_eq!(l.target.size(), 2);
        assert_eq!(l.apply(Elem(3)), l.target.one_el());
        assert_eq!(l.idempotent, Elem(3));

        let l = localize_at(&z6, Elem(2)).unwrap();
        assert_eq!(l.target.size(), 3);
        assert_eq!(l.idempotent, Elem(4));
        assert!(l.target.is_field());
        assert_eq!(l.target.lambda_el(), l.apply(Elem(5)));
    }

    #[test]
    fn nilpotent_rejected() {
        let z4 = ring("Zmod 4, trivial, lambda=1");
        assert!(matches!(localize_at(&z4, Elem(2)), Err(Error::NilpotentElement(_))));
    }

    #[test]
    fn kernel_is_annihilator_of_power() {
        for spec in ["Zmod 12, trivial, lambda=1", "Zmod 36, trivial, lambda=-1", "GaussMod 5, conj, lambda=1"] {
            let r = ring(spec);
            for s in r.elements().filter(|&s| !r.is_nilpotent(s)) {
                let Ok(l) = localize_at(&r, s) else { continue };
                assert!(l.target.is_unit(l.apply(s)));
                let sk = r.pow(s, l.k);
                for a in r.elements() {
                    assert_eq!(l.apply(a) == Elem(0), r.mul_e(sk, a) == Elem(0));
                    assert_eq!(l.apply(l.lift(l.apply(a))), l.apply(a));
                    for b in r.elements() {
                        assert_eq!(l.apply(r.mul_e(a, b)), l.target.mul_e(l.apply(a), l.apply(b)));
                        assert_eq!(l.apply(r.add_e(a, b)), l.target.add_e(l.apply(a), l.apply(b)));
                    }
                    assert_eq!(l.apply(r.conj_e(a)), l.target.conj_e(l.apply(a)));
                }
            }
        }
    }
}
