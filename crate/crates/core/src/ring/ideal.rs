use std::collections::VecDeque;
use std::sync::Arc;

use serde::Serialize;

use super::{Elem, RingCtx};
use crate::error::{Error, Result};

/// An ideal of a finite ring, kept as generators plus its full element set.
#[derive(Clone, Debug)]
pub struct Ideal {
    ring: Arc<RingCtx>,
    gens: Vec<Elem>,
    members: Vec<bool>,
}

impl PartialEq for Ideal {
    fn eq(&self, other: &Self) -> bool {
        self.members == other.members
    }
}

impl Eq for Ideal {}

impl Ideal {
    pub fn generated_by(ring: &Arc<RingCtx>, gens: &[Elem]) -> Ideal {
        // span of {g x} under addition
        let mut products = Vec::new();
        for &g in gens {
            for x in ring.elements() {
                products.push(ring.mul_e(g, x));
            }
        }
        let members = additive_span(ring, &products);
        Ideal { ring: ring.clone(), gens: gens.to_vec(), members }
    }

    pub fn zero(ring: &Arc<RingCtx>) -> Ideal {
        Ideal::generated_by(ring, &[])
    }

    pub fn unit(ring: &Arc<RingCtx>) -> Ideal {
        Ideal::generated_by(ring, &[ring.one_el()])
    }

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
        self.ring.elements().filter(|a| self.members[a.idx()]).collect()
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_unit(&self) -> bool {
        self.contains(self.ring.one_el())
    }

    /// Smallest-first greedy generating set, for display.
    pub fn minimal_gens(&self) -> Vec<Elem> {
        let mut gens = Vec::new();
        let mut cur = Ideal::zero(&self.ring);
        for a in self.elements() {
            if !cur.contains(a) {
                gens.push(a);
                cur = Ideal::generated_by(&self.ring, &gens);
                if cur == *self {
                    break;
                }
            }
        }
        gens
    }
}

/// Additive subgroup generated by `gens` (always contains 0).
pub(crate) fn additive_span(ring: &RingCtx, gens: &[Elem]) -> Vec<bool> {
    let mut members = vec![false; ring.size()];
    members[0] = true;
    let mut queue = VecDeque::from([Elem(0)]);
    let mut uniq: Vec<Elem> = gens.to_vec();
    uniq.sort();
    uniq.dedup();
    while let Some(a) = queue.pop_front() {
        for &g in &uniq {
            let b = ring.add_e(a, g);
            if !members[b.idx()] {
                members[b.idx()] = true;
                queue.push_back(b);
            }
        }
    }
    members
}

/// A maximal ideal with its residue-field surjection `R -> R/m`.
#[derive(Clone, Debug)]
pub struct MaximalIdeal {
    pub ideal: Ideal,
    /// Primitive idempotent of the local factor this ideal belongs to.
    pub idempotent: Elem,
    /// `residue[a]` is the index of the coset `a + m`.
    pub residue: Vec<u16>,
    pub residue_size: usize,
}

/// All maximal ideals of a finite commutative ring.
///
/// A finite commutative ring is the product of the local rings `R e_i` for
/// its primitive idempotents `e_i`; the maximal ideals are
/// `m_i = { a : a e_i is not a unit of R e_i }`.
pub fn maximal_ideals(ring: &Arc<RingCtx>) -> Vec<MaximalIdeal> {
    let idem: Vec<Elem> = ring.idempotents().into_iter().filter(|&e| e != Elem(0)).collect();
    let primitive: Vec<Elem> = idem.iter().copied().filter(|&e| !idem.iter().any(|&f| f != e && ring.mul_e(e, f) == f)).collect();
    let mut out = Vec::new();
    for e in primitive {
        let unit_in_corner = |a: Elem| {
            let ae = ring.mul_e(a, e);
            ring.elements().any(|y| ring.mul_e(ae, y) == e)
        };
        let members: Vec<Elem> = ring.elements().filter(|&a| !unit_in_corner(a)).collect();
        let mut gens = Vec::new();
        let mut ideal = Ideal::zero(ring);
        for &a in &members {
            if !ideal.contains(a) {
                gens.push(a);
                ideal = Ideal::generated_by(ring, &gens);
            }
        }
        let mut residue = vec![u16::MAX; ring.size()];
        let mut next = 0u16;
        for a in ring.elements() {
            if residue[a.idx()] != u16::MAX {
                continue;
            }
            for &m in &members {
                residue[ring.add_e(a, m).idx()] = next;
            }
            next += 1;
        }
        out.push(MaximalIdeal { ideal, idempotent: e, residue, residue_size: next as usize });
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct PartitionOfUnity {
    /// `b_i`, summing to 1.
    pub parts: Vec<Elem>,
    /// Witnesses `c_i` with `b_i = s_i^l c_i`.
    pub witnesses: Vec<Elem>,
    pub exponent: u32,
}

/// Find `b_i in (s_i^l)` with `sum b_i = 1`.
///
/// Breadth-first search over the ideal `(s_1^l, ..., s_r^l)`, tracking for
/// every reached element the coefficients that produce it. The search order
/// is fixed, so the answer is deterministic.
pub fn partition_of_unity(ring: &Arc<RingCtx>, s: &[Elem], l: u32) -> Result<PartitionOfUnity> {
    let powers: Vec<Elem> = s.iter().map(|&x| ring.pow(x, l)).collect();
    let r = powers.len();
    let mut witness: Vec<Option<Vec<Elem>>> = vec![None; ring.size()];
    witness[0] = Some(vec![Elem(0); r]);
    let mut queue = VecDeque::from([Elem(0)]);
    let one = ring.one_el();
    while let Some(a) = queue.pop_front() {
        if a == one {
            break;
        }
        let wa = witness[a.idx()].clone().unwrap();
        for (i, &p) in powers.iter().enumerate() {
            for x in ring.elements() {
                let b = ring.add_e(a, ring.mul_e(p, x));
                if witness[b.idx()].is_none() {
                    let mut wb = wa.clone();
                    wb[i] = ring.add_e(wb[i], x);
                    witness[b.idx()] = Some(wb);
                    queue.push_back(b);
                }
            }
        }
    }
    let witnesses = witness[one.idx()].clone().ok_or(Error::NotACover)?;
    let parts: Vec<Elem> = powers.iter().zip(&witnesses).map(|(&p, &c)| ring.mul_e(p, c)).collect();
    Ok(PartitionOfUnity { parts, witnesses, exponent: l })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(s: &str) -> Arc<RingCtx> {
        RingCtx::parse(s).unwrap()
    }

    #[test]
    fn maximal_ideals_of_small_rings() {
        let z6 = ring("Zmod 6, trivial, lambda=1");
        let mut gens: Vec<Vec<Elem>> = maximal_ideals(&z6).iter().map(|m| m.ideal.minimal_gens()).collect();
        gens.sort();
        assert_eq!(gens, vec![vec![Elem(2)], vec![Elem(3)]]);

        let f2 = ring("GF 2, trivial, lambda=1");
        let m = maximal_ideals(&f2);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].ideal.elements(), vec![Elem(0)]);
        assert_eq!(m[0].residue_size, 2);

        let z4 = ring("Zmod 4, trivial, lambda=1");
        let m = maximal_ideals(&z4);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].ideal.minimal_gens(), vec![Elem(2)]);
        assert_eq!(m[0].residue_size, 2);
    }

    #[test]
    fn partition_examples() {
        let z6 = ring("Zmod 6, trivial, lambda=1");
        let p = partition_of_unity(&z6, &[Elem(2), Elem(3)], 2).unwrap();
        assert_eq!(p.parts, vec![Elem(4), Elem(3)]);

        let p = partition_of_unity(&z6, &[Elem(1)], 5).unwrap();
        assert_eq!(p.parts, vec![Elem(1)]);

        let z4 = ring("Zmod 4, trivial, lambda=1");
        assert_eq!(partition_of_unity(&z4, &[Elem(2)], 2).unwrap_err(), Error::NotACover);
        assert_eq!(partition_of_unity(&z6, &[Elem(2)], 1).unwrap_err(), Error::NotACover);
    }

    #[test]
    fn ideals_are_closed() {
        let z12 = ring("Zmod 12, trivial, lambda=1");
        for g in z12.elements() {
            let i = Ideal::generated_by(&z12, &[g]);
            for a in i.elements() {
                for b in i.elements() {
                    assert!(i.contains(z12.add_e(a, b)));
                }
                for x in z12.elements() {
                    assert!(i.contains(z12.mul_e(a, x)));
                }
            }
        }
    }
}
