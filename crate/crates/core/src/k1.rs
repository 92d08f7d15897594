//! Enumeration of `GQ_{2n}` and `EQ_{2n}` over tiny rings, `K1` and the
//! desk-scale stabilization experiments.

use std::sync::Arc;
use std::time::Instant;

use indexmap::IndexSet;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustc_hash::FxBuildHasher;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::algebra::{identity, mat_mul, mat_vec, Mat};
use crate::error::{Error, Result};
use crate::quad::{all_generators, gen_matrix, gq_inverse, is_in_gq, rows_json, stab_embed, FormRing, Slot};
use crate::ring::{Elem, Ideal, RingCtx};

pub const DEFAULT_CAP: usize = 4_000_000;
/// Largest `|R|^{4n^2}` accepted by [`enum_gq_bruteforce`].
pub const BRUTE_LIMIT: u128 = 100_000_000;
const VECTOR_LIMIT: u128 = 10_000_000;
const CHUNK: usize = 1 << 15;

type Key = [u64; 4];

#[derive(Clone, Debug)]
struct Packer {
    bits: u32,
    cells: usize,
}

impl Packer {
    fn new(r: &RingCtx, dim: usize) -> Result<Packer> {
        let bits = (usize::BITS - (r.size() - 1).leading_zeros()).max(1);
        let cells = dim * dim;
        if bits as usize * cells > 256 {
            return Err(Error::TooLarge(format!("{dim}x{dim} matrices over a ring of size {} do not fit a packed key", r.size())));
        }
        Ok(Packer { bits, cells })
    }

    fn pack(&self, e: &[Elem]) -> Key {
        let mut k = [0u64; 4];
        for (p, x) in e.iter().enumerate() {
            let bit = p * self.bits as usize;
            k[bit / 64] |= (x.0 as u64) << (bit % 64);
        }
        k
    }

    fn unpack(&self, k: &Key) -> Vec<Elem> {
        let mask = (1u64 << self.bits) - 1;
        (0..self.cells)
            .map(|p| {
                let bit = p * self.bits as usize;
                Elem(((k[bit / 64] >> (bit % 64)) & mask) as u16)
            })
            .collect()
    }
}

/// Non-zero entries of a matrix, used for fast left multiplication.
type Sparse = Vec<(usize, usize, Elem)>;

fn sparse(m: &Mat<Elem>) -> Sparse {
    let d = m.dim;
    (0..d * d).filter(|&p| m.entries[p] != Elem(0)).map(|p| (p / d, p % d, m.entries[p])).collect()
}

fn left_mul(r: &RingCtx, g: &Sparse, dim: usize, m: &[Elem]) -> Vec<Elem> {
    let mut out = vec![Elem(0); dim * dim];
    for &(i, k, v) in g {
        for c in 0..dim {
            let x = m[k * dim + c];
            if x != Elem(0) {
                out[i * dim + c] = r.add_e(out[i * dim + c], r.mul_e(v, x));
            }
        }
    }
    out
}

/// A finite matrix group stored as packed entry vectors in discovery order.
#[derive(Clone, Debug)]
pub struct GroupEnum {
    ring: Arc<RingCtx>,
    dim: usize,
    packer: Packer,
    gens: Vec<Mat<Elem>>,
    store: IndexSet<Key, FxBuildHasher>,
    complete: bool,
    cap: usize,
}

impl GroupEnum {
    fn empty(ring: &Arc<RingCtx>, dim: usize, gens: Vec<Mat<Elem>>, cap: usize) -> Result<GroupEnum> {
        Ok(GroupEnum {
            ring: ring.clone(),
            dim,
            packer: Packer::new(ring, dim)?,
            gens,
            store: IndexSet::with_hasher(FxBuildHasher),
            complete: false,
            cap,
        })
    }

    pub fn order(&self) -> usize {
        self.store.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ring(&self) -> &Arc<RingCtx> {
        &self.ring
    }

    pub fn gens(&self) -> &[Mat<Elem>] {
        &self.gens
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn require_complete(&self) -> Result<()> {
        if self.complete {
            Ok(())
        } else {
            Err(Error::CapExceeded { cap: self.cap })
        }
    }

    pub fn contains(&self, m: &Mat<Elem>) -> bool {
        m.dim == self.dim && self.store.contains(&self.packer.pack(&m.entries))
    }

    pub fn index_of(&self, m: &Mat<Elem>) -> Option<usize> {
        self.store.get_index_of(&self.packer.pack(&m.entries))
    }

    pub fn get(&self, i: usize) -> Mat<Elem> {
        Mat { dim: self.dim, entries: self.packer.unpack(&self.store[i]) }
    }

    pub fn iter(&self) -> impl Iterator<Item = Mat<Elem>> + '_ {
        (0..self.order()).map(|i| self.get(i))
    }
}

fn dedup_gens(r: &RingCtx, dim: usize, gens: impl IntoIterator<Item = Mat<Elem>>) -> Vec<Mat<Elem>> {
    let id = identity(r, dim);
    let mut out: Vec<Mat<Elem>> = Vec::new();
    for g in gens {
        if g != id && !out.contains(&g) {
            out.push(g);
        }
    }
    out
}

/// Breadth-first closure of `{I}` under left multiplication by `gens`. A
/// finite monoid generated by invertible matrices is a group, so inverses
/// need not be added. Stops with `complete == false` once `cap` elements
/// are stored. The order of the store does not depend on thread count.
pub fn closure(ring: &Arc<RingCtx>, dim: usize, gens: &[Mat<Elem>], cap: usize) -> Result<GroupEnum> {
    let mut g = GroupEnum::empty(ring, dim, gens.to_vec(), cap)?;
    let sp: Vec<Sparse> = gens.iter().map(sparse).collect();
    g.store.insert(g.packer.pack(&identity(&**ring, dim).entries));
    let mut start = 0;
    'bfs: while start < g.store.len() {
        let end = (start + CHUNK).min(g.store.len());
        let produced: Vec<Vec<Key>> = (start..end)
            .into_par_iter()
            .with_min_len(256)
            .map(|i| {
                let m = g.packer.unpack(&g.store[i]);
                sp.iter().map(|s| g.packer.pack(&left_mul(ring, s, dim, &m))).collect()
            })
            .collect();
        for keys in produced {
            for k in keys {
                if g.store.len() >= cap && !g.store.contains(&k) {
                    break 'bfs;
                }
                g.store.insert(k);
            }
        }
        start = end;
    }
    g.complete = start >= g.store.len();
    Ok(g)
}

/// Elementary generators of `EQ_{2n}` as matrices, without repeats.
pub fn eq_generators(fr: &FormRing, n: usize) -> Vec<Mat<Elem>> {
    let r = &fr.ring;
    dedup_gens(r, 2 * n, all_generators(fr, n).into_iter().map(|(f, i, j, a)| gen_matrix(r, n, f, i, j, &a)))
}

pub fn eq_closure(fr: &FormRing, n: usize, cap: usize) -> Result<GroupEnum> {
    closure(&fr.ring, 2 * n, &eq_generators(fr, n), cap)
}

/// Column candidates: `h(v, v) = 0` and `f(v, v)` in `Lambda`.
struct ColumnSearch<'a> {
    fr: &'a FormRing,
    n: usize,
    cands: Vec<Vec<Elem>>,
}

impl<'a> ColumnSearch<'a> {
    fn new(fr: &'a FormRing, n: usize) -> Result<ColumnSearch<'a>> {
        let r = &fr.ring;
        let total = (r.size() as u128).checked_pow(2 * n as u32).unwrap_or(u128::MAX);
        if total > VECTOR_LIMIT {
            return Err(Error::TooLarge(format!("{total} candidate columns")));
        }
        let cands = all_vectors(r, 2 * n).filter(|v| hh(r, n, v, v) == Elem(0) && fr.lambda.contains(ff(r, n, v, v))).collect();
        Ok(ColumnSearch { fr, n, cands })
    }

    fn psi(&self, a: usize, b: usize) -> Elem {
        let r = &self.fr.ring;
        let n = self.n;
        if a < n && b == a + n {
            r.lambda_el()
        } else if a >= n && b + n == a {
            r.one_el()
        } else {
            Elem(0)
        }
    }

    fn fits(&self, cols: &[usize], v: &[Elem]) -> bool {
        let r = &self.fr.ring;
        let c = cols.len();
        cols.iter().enumerate().all(|(a, &u)| {
            let u = &self.cands[u];
            hh(r, self.n, u, v) == self.psi(a, c) && hh(r, self.n, v, u) == self.psi(c, a)
        })
    }

    fn matrix(&self, cols: &[usize]) -> Mat<Elem> {
        let d = 2 * self.n;
        let mut m = Mat { dim: d, entries: vec![Elem(0); d * d] };
        for (c, &col) in cols.iter().enumerate() {
            for (row, &x) in self.cands[col].iter().enumerate() {
                m.set(row, c, x);
            }
        }
        m
    }

    /// All completions of `cols`, in candidate order, at most `cap`.
    fn complete(&self, cols: &mut Vec<usize>, out: &mut Vec<Mat<Elem>>, cap: usize) {
        if cols.len() == 2 * self.n {
            out.push(self.matrix(cols));
            return;
        }
        for (k, v) in self.cands.iter().enumerate() {
            if self.fits(cols, v) {
                cols.push(k);
                self.complete(cols, out, cap);
                cols.pop();
                if out.len() >= cap {
                    return;
                }
            }
        }
    }

    fn random(&self, rng: &mut ChaCha8Rng, tries: usize) -> Option<Mat<Elem>> {
        let d = 2 * self.n;
        for _ in 0..tries {
            let mut cols: Vec<usize> = Vec::with_capacity(d);
            while cols.len() < d {
                let ok: Vec<usize> = (0..self.cands.len()).filter(|&k| self.fits(&cols, &self.cands[k])).collect();
                if ok.is_empty() {
                    break;
                }
                cols.push(ok[rng.random_range(0..ok.len())]);
            }
            if cols.len() == d {
                return Some(self.matrix(&cols));
            }
        }
        None
    }
}

fn ff(r: &RingCtx, n: usize, u: &[Elem], v: &[Elem]) -> Elem {
    let mut acc = Elem(0);
    for i in 0..n {
        acc = r.add_e(acc, r.mul_e(r.conj_e(u[i]), v[n + i]));
    }
    r.mul_e(r.lambda_el(), acc)
}

fn hh(r: &RingCtx, n: usize, u: &[Elem], v: &[Elem]) -> Elem {
    let mut acc = Elem(0);
    for i in 0..n {
        acc = r.add_e(acc, r.mul_e(r.mul_e(r.lambda_el(), r.conj_e(u[i])), v[n + i]));
        acc = r.add_e(acc, r.mul_e(r.conj_e(u[n + i]), v[i]));
    }
    acc
}

fn all_vectors(r: &RingCtx, len: usize) -> impl Iterator<Item = Vec<Elem>> + '_ {
    let size = r.size();
    let total = size.pow(len as u32);
    (0..total).map(move |mut c| {
        (0..len)
            .map(|_| {
                let x = Elem((c % size) as u16);
                c /= size;
                x
            })
            .collect()
    })
}

/// Every matrix satisfying the membership conditions, found column by
/// column so that partial matrices violating the hermitian condition are
/// pruned. Stops at `cap` elements with `complete == false`.
pub fn enum_gq_search(fr: &FormRing, n: usize, cap: usize) -> Result<GroupEnum> {
    let r = &fr.ring;
    let search = ColumnSearch::new(fr, n)?;
    let mut g = GroupEnum::empty(r, 2 * n, vec![], cap)?;
    let firsts: Vec<usize> = (0..search.cands.len()).collect();
    let batch = rayon::current_num_threads().max(1) * 4;
    let mut complete = true;
    'outer: for chunk in firsts.chunks(batch) {
        let found: Vec<Vec<Mat<Elem>>> = chunk
            .par_iter()
            .map(|v| {
                let mut out = Vec::new();
                let mut cols = vec![*v];
                search.complete(&mut cols, &mut out, cap);
                out
            })
            .collect();
        for ms in found {
            for m in ms {
                if g.store.len() >= cap {
                    complete = false;
                    break 'outer;
                }
                debug_assert!(is_in_gq(fr, &m));
                g.store.insert(g.packer.pack(&m.entries));
            }
        }
    }
    g.complete = complete;
    Ok(g)
}

/// The whole group by exhaustive filtering of all `|R|^{4n^2}` matrices
/// (pruned column by column, which yields the same set).
pub fn enum_gq_bruteforce(fr: &FormRing, n: usize) -> Result<GroupEnum> {
    let total = (fr.ring.size() as u128).checked_pow((4 * n * n) as u32).unwrap_or(u128::MAX);
    if total > BRUTE_LIMIT {
        return Err(Error::TooLarge(format!("|R|^(4n^2) = {total} exceeds {BRUTE_LIMIT}")));
    }
    let g = enum_gq_search(fr, n, usize::MAX)?;
    Ok(g)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Brute force when allowed, then the pruned search, then sampling.
    #[default]
    Auto,
    BruteForce,
    Search,
    Sampling,
}

impl Strategy {
    pub fn parse(s: &str) -> Result<Strategy> {
        match s {
            "auto" => Ok(Strategy::Auto),
            "brute-force" => Ok(Strategy::BruteForce),
            "search" => Ok(Strategy::Search),
            "sampling" => Ok(Strategy::Sampling),
            _ => Err(Error::Parse(format!("unknown strategy `{s}`"))),
        }
    }
}

#[derive(Copy, Clone, Debug)]
pub struct K1Options {
    pub strategy: Strategy,
    pub cap: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for K1Options {
    fn default() -> Self {
        K1Options { strategy: Strategy::Auto, cap: DEFAULT_CAP, samples: 2000, seed: 0 }
    }
}

pub fn stable_range(r: &RingCtx, n: usize) -> bool {
    2 * n >= 6.max(2 * r.dimension() as usize + 2)
}

fn hypothesis(r: &RingCtx, n: usize) -> String {
    let d = r.dimension();
    let bound = 6.max(2 * d as usize + 2);
    format!("2n = {} {} max(6, 2d+2) = {} with d = {}", 2 * n, if 2 * n >= bound { ">=" } else { "<" }, bound, d)
}

#[derive(Clone, Debug, Serialize)]
pub struct QuotientInfo {
    pub abelian: bool,
    pub element_orders: Vec<usize>,
    pub cyclic: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct K1Report {
    pub ring: String,
    pub lambda: Value,
    #[serde(rename = "Lambda")]
    pub form_param: Vec<Value>,
    pub n: usize,
    pub d: u32,
    pub hypothesis: String,
    pub in_stable_range: bool,
    pub method: String,
    pub gq_order: Option<usize>,
    pub eq_order: usize,
    pub eq_complete: bool,
    pub normal: bool,
    pub coset_count: usize,
    pub lower_bound_only: bool,
    pub coset_reps: Vec<Value>,
    pub quotient: Option<QuotientInfo>,
    pub caps_hit: Vec<String>,
}

/// Enumerated data behind a [`K1Report`].
#[derive(Clone, Debug)]
pub struct K1 {
    pub report: K1Report,
    pub eq: GroupEnum,
    pub gq: Option<GroupEnum>,
    pub reps: Vec<Mat<Elem>>,
}

impl K1 {
    /// Index of the coset of `m`, if `m` lies in a known coset.
    pub fn coset_of(&self, m: &Mat<Elem>) -> Option<usize> {
        let r = &self.eq.ring;
        self.reps.iter().position(|rep| self.eq.contains(&mat_mul(r, &gq_inverse(r, rep), m)))
    }
}

fn quotient_info(k: &K1) -> Option<QuotientInfo> {
    let r = &k.eq.ring;
    let c = k.reps.len();
    if c > 64 {
        return None;
    }
    let mut table = vec![0usize; c * c];
    for a in 0..c {
        for b in 0..c {
            table[a * c + b] = k.coset_of(&mat_mul(r, &k.reps[a], &k.reps[b]))?;
        }
    }
    let abelian = (0..c).all(|a| (0..c).all(|b| table[a * c + b] == table[b * c + a]));
    let element_orders: Vec<usize> = (0..c)
        .map(|a| {
            let mut x = a;
            let mut ord = 1;
            while x != 0 && ord <= c {
                x = table[x * c + a];
                ord += 1;
            }
            ord
        })
        .collect();
    let cyclic = element_orders.contains(&c);
    Some(QuotientInfo { abelian, element_orders, cyclic })
}

fn enumerate_gq(fr: &FormRing, n: usize, opts: &K1Options, caps: &mut Vec<String>) -> Result<Option<(GroupEnum, &'static str)>> {
    let brute = || enum_gq_bruteforce(fr, n).map(|g| (g, "brute-force"));
    let search = || enum_gq_search(fr, n, opts.cap).map(|g| (g, "search"));
    match opts.strategy {
        Strategy::BruteForce => brute().map(Some),
        Strategy::Search => {
            let (g, m) = search()?;
            if !g.complete {
                caps.push(format!("GQ search stopped at cap {}", opts.cap));
                return Ok(None);
            }
            Ok(Some((g, m)))
        }
        Strategy::Sampling => Ok(None),
        Strategy::Auto => match brute() {
            Ok(x) => Ok(Some(x)),
            Err(Error::TooLarge(_)) => match search() {
                Ok((g, m)) if g.complete => Ok(Some((g, m))),
                Ok(_) => {
                    caps.push(format!("GQ search stopped at cap {}", opts.cap));
                    Ok(None)
                }
                Err(Error::TooLarge(msg)) => {
                    caps.push(msg);
                    Ok(None)
                }
                Err(e) => Err(e),
            },
            Err(e) => Err(e),
        },
    }
}

/// `K_{1,2n} = GQ_{2n} / EQ_{2n}`, with normality of `EQ` checked before
/// cosets are formed.
pub fn k1_data(fr: &FormRing, n: usize, opts: &K1Options) -> Result<K1> {
    let r = &fr.ring;
    let mut caps = Vec::new();
    let eq = eq_closure(fr, n, opts.cap)?;
    if !eq.complete {
        caps.push(format!("EQ closure stopped at cap {}", opts.cap));
        return Err(Error::CapExceeded { cap: opts.cap });
    }
    let gq = enumerate_gq(fr, n, opts, &mut caps)?;
    let id = identity(&**r, 2 * n);
    let mut reps = vec![id.clone()];
    let method;
    let lower_bound_only;
    match &gq {
        Some((g, m)) => {
            method = m.to_string();
            lower_bound_only = false;
            if let Some(bad) = eq.iter().find(|e| !g.contains(e)) {
                return Err(Error::VerificationFailed(format!("EQ element outside GQ: {:?}", rows_json(r, &bad))));
            }
            let mut covered = vec![false; g.order()];
            for i in 0..g.order() {
                if covered[i] {
                    continue;
                }
                let rep = g.get(i);
                if i != 0 {
                    reps.push(rep.clone());
                }
                let idx: Vec<Option<usize>> =
                    (0..eq.order()).into_par_iter().map(|j| g.index_of(&mat_mul(&**r, &rep, &eq.get(j)))).collect();
                for x in idx {
                    match x {
                        Some(x) => covered[x] = true,
                        None => return Err(Error::VerificationFailed("GQ not closed under products".into())),
                    }
                }
            }
        }
        None => {
            method = "sampling".into();
            lower_bound_only = true;
            let search = ColumnSearch::new(fr, n)?;
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            for _ in 0..opts.samples {
                let Some(m) = search.random(&mut rng, 64) else { continue };
                let known = reps.iter().any(|rep| eq.contains(&mat_mul(&**r, &gq_inverse(&**r, rep), &m)));
                if !known {
                    reps.push(m);
                }
            }
        }
    }
    let normal = reps.par_iter().all(|rep| {
        let inv = gq_inverse(&**r, rep);
        eq.gens.iter().all(|x| eq.contains(&mat_mul(&**r, &mat_mul(&**r, rep, x), &inv)))
    });
    if !normal {
        return Err(Error::VerificationFailed("EQ is not normal in GQ".into()));
    }
    let coset_count = reps.len();
    let gq_order = gq.as_ref().map(|(g, _)| g.order());
    if let Some(o) = gq_order {
        if o != eq.order() * coset_count {
            return Err(Error::VerificationFailed(format!("|GQ| = {o} but |EQ| * cosets = {}", eq.order() * coset_count)));
        }
    }
    let report = K1Report {
        ring: r.description().to_string(),
        lambda: r.label(r.lambda_el()).clone(),
        form_param: fr.lambda.elements().iter().map(|&x| r.label(x).clone()).collect(),
        n,
        d: r.dimension(),
        hypothesis: hypothesis(r, n),
        in_stable_range: stable_range(r, n),
        method,
        gq_order,
        eq_order: eq.order(),
        eq_complete: eq.complete,
        normal,
        coset_count,
        lower_bound_only,
        coset_reps: reps.iter().map(|m| rows_json(r, m)).collect(),
        quotient: None,
        caps_hit: caps,
    };
    let mut k = K1 { report, eq, gq: gq.map(|(g, _)| g), reps };
    k.report.quotient = quotient_info(&k);
    Ok(k)
}

pub fn k1_compute(fr: &FormRing, n: usize, opts: &K1Options) -> Result<K1Report> {
    k1_data(fr, n, opts).map(|k| k.report)
}

#[derive(Clone, Debug, Serialize)]
pub struct StabMapReport {
    pub n: usize,
    pub slot: String,
    pub hypothesis: String,
    pub generators_to_generators: bool,
    pub eq_into_eq: bool,
    pub eq_elements_checked: usize,
    pub well_defined: Option<bool>,
    pub coset_map: Option<Vec<usize>>,
    pub injective: Option<bool>,
    pub surjective: Option<bool>,
    pub predicted_surjective: bool,
    pub predicted_iso: bool,
    pub consistent_with_prediction: Option<bool>,
    pub lower: K1Report,
    pub upper: Option<K1Report>,
    pub caps_hit: Vec<String>,
}

/// The map `K_{1,2n} -> K_{1,2n+2}` induced by [`stab_embed`].
pub fn stab_map_test(fr: &FormRing, n: usize, slot: Slot, opts: &K1Options) -> Result<StabMapReport> {
    let r = &fr.ring;
    let lo = k1_data(fr, n, opts)?;
    let mut caps = lo.report.caps_hit.clone();
    let upper_gens = eq_generators(fr, n + 1);
    let generators_to_generators = lo.eq.gens.iter().all(|g| upper_gens.contains(&stab_embed(&**r, g, slot)));
    let hi = match k1_data(fr, n + 1, opts) {
        Ok(k) => Some(k),
        Err(Error::CapExceeded { cap }) => {
            caps.push(format!("level {} hit cap {cap}", n + 1));
            None
        }
        Err(Error::TooLarge(msg)) => {
            caps.push(msg);
            None
        }
        Err(e) => return Err(e),
    };
    let predicted_iso = stable_range(r, n);
    let predicted_surjective = stable_range(r, n + 1);
    let mut rep = StabMapReport {
        n,
        slot: format!("{slot:?}").to_lowercase(),
        hypothesis: hypothesis(r, n),
        generators_to_generators,
        eq_into_eq: generators_to_generators,
        eq_elements_checked: 0,
        well_defined: None,
        coset_map: None,
        injective: None,
        surjective: None,
        predicted_surjective,
        predicted_iso,
        consistent_with_prediction: None,
        lower: lo.report.clone(),
        upper: None,
        caps_hit: caps,
    };
    let Some(hi) = hi else { return Ok(rep) };
    rep.eq_into_eq = (0..lo.eq.order()).into_par_iter().all(|i| hi.eq.contains(&stab_embed(&**r, &lo.eq.get(i), slot)));
    rep.eq_elements_checked = lo.eq.order();
    if !hi.report.lower_bound_only && !lo.report.lower_bound_only {
        let map: Option<Vec<usize>> = lo.reps.iter().map(|m| hi.coset_of(&stab_embed(&**r, m, slot))).collect();
        if let (Some(map), Some(glo)) = (map, lo.gq.as_ref()) {
            let well_defined = (0..glo.order()).into_par_iter().all(|i| {
                let g = glo.get(i);
                match (lo.coset_of(&g), hi.coset_of(&stab_embed(&**r, &g, slot))) {
                    (Some(a), Some(b)) => map[a] == b,
                    _ => false,
                }
            });
            let mut image = map.clone();
            image.sort();
            image.dedup();
            let injective = image.len() == map.len();
            let surjective = image.len() == hi.reps.len();
            rep.consistent_with_prediction = Some((!predicted_iso || (injective && surjective)) && (!predicted_surjective || surjective));
            rep.well_defined = Some(well_defined && rep.eq_into_eq);
            rep.injective = Some(injective);
            rep.surjective = Some(surjective);
            rep.coset_map = Some(map);
        }
    }
    rep.upper = Some(hi.report);
    Ok(rep)
}

#[derive(Clone, Debug, Serialize)]
pub struct OrbitReport {
    pub n: usize,
    pub ideal: Vec<Value>,
    pub hypothesis: String,
    pub in_hypothesis: bool,
    pub generator_count: usize,
    pub um_size: usize,
    pub orbit_size: usize,
    pub transitive: bool,
    pub counterexample: Option<Vec<Value>>,
    pub caps_hit: Vec<String>,
}

/// The vector `e_{2n}`, last in the order `e_1, ..., e_n, e_{-n}, ..., e_{-1}`.
pub fn e_last(r: &RingCtx, n: usize) -> Vec<Elem> {
    let mut v = vec![Elem(0); 2 * n];
    v[n] = r.one_el();
    v
}

/// Generators of `EQ_{2n}(R, Lambda, I)`: the elementary matrices with
/// parameter in `I` and their conjugates by all elementary generators.
pub fn relative_generators(fr: &FormRing, n: usize, ideal: &Ideal) -> Vec<Mat<Elem>> {
    let r = &fr.ring;
    let all: Vec<(crate::quad::Family, usize, usize, Elem)> = all_generators(fr, n);
    let base: Vec<Mat<Elem>> = all.iter().filter(|g| ideal.contains(g.3)).map(|&(f, i, j, a)| gen_matrix(&**r, n, f, i, j, &a)).collect();
    if ideal.is_unit() {
        return dedup_gens(r, 2 * n, base);
    }
    let full: Vec<Mat<Elem>> = all.iter().map(|&(f, i, j, a)| gen_matrix(&**r, n, f, i, j, &a)).collect();
    let conj = full.iter().flat_map(|y| {
        let yi = gq_inverse(&**r, y);
        base.iter().map(move |x| mat_mul(&**r, &mat_mul(&**r, y, x), &yi))
    });
    dedup_gens(r, 2 * n, base.clone().into_iter().chain(conj))
}

/// Orbit of `e_{2n}` under `EQ(I)` compared with `Um(I)`.
pub fn unimodular_orbit_test(fr: &FormRing, n: usize, ideal: &Ideal, cap: usize) -> Result<OrbitReport> {
    orbit_with_gens(fr, n, ideal, &relative_generators(fr, n, ideal), cap)
}

pub fn orbit_with_gens(fr: &FormRing, n: usize, ideal: &Ideal, gens: &[Mat<Elem>], cap: usize) -> Result<OrbitReport> {
    let r = &fr.ring;
    let total = (r.size() as u128).checked_pow(2 * n as u32).unwrap_or(u128::MAX);
    if total > VECTOR_LIMIT {
        return Err(Error::TooLarge(format!("{total} vectors")));
    }
    let e = e_last(r, n);
    let um: IndexSet<Vec<Elem>, FxBuildHasher> = all_vectors(r, 2 * n)
        .filter(|v| v.iter().zip(&e).all(|(&x, &y)| ideal.contains(r.sub_e(x, y))) && Ideal::generated_by(r, v).is_unit())
        .collect();
    let mut orbit: IndexSet<Vec<Elem>, FxBuildHasher> = IndexSet::with_hasher(FxBuildHasher);
    orbit.insert(e.clone());
    let mut caps = Vec::new();
    let mut i = 0;
    while i < orbit.len() {
        let v = orbit[i].clone();
        for g in gens {
            let w = mat_vec(&**r, g, &v);
            if orbit.len() >= cap && !orbit.contains(&w) {
                caps.push(format!("orbit stopped at cap {cap}"));
                break;
            }
            orbit.insert(w);
        }
        if !caps.is_empty() {
            break;
        }
        i += 1;
    }
    let stray = orbit.iter().find(|v| !um.contains(*v)).or_else(|| um.iter().find(|v| !orbit.contains(*v)));
    let label = |v: &Vec<Elem>| v.iter().map(|&x| r.label(x).clone()).collect::<Vec<_>>();
    Ok(OrbitReport {
        n,
        ideal: ideal.elements().iter().map(|&x| r.label(x).clone()).collect(),
        hypothesis: hypothesis(r, n),
        in_hypothesis: stable_range(r, n),
        generator_count: gens.len(),
        um_size: um.len(),
        orbit_size: orbit.len(),
        transitive: stray.is_none() && caps.is_empty(),
        counterexample: stray.map(label),
        caps_hit: caps,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilizerReport {
    pub n: usize,
    pub hypothesis: String,
    pub checked: usize,
    pub skipped: usize,
    pub passed: usize,
    pub all_pass: bool,
    pub counterexample: Option<Value>,
    pub caps_hit: Vec<String>,
}

/// Every `Delta` in `GQ_{2n}` fixing `e_{2n}` is checked to lie in
/// `EQ_{2n} * GQ_{2n-2}`, with `GQ_{2n-2}` embedded on the pairs other
/// than `(e_1, e_{-1})`.
pub fn stabilizer_decomp_test(fr: &FormRing, n: usize, opts: &K1Options) -> Result<StabilizerReport> {
    if n < 2 {
        return Err(Error::PreconditionViolated("stabilizer decomposition needs n >= 2".into()));
    }
    let r = &fr.ring;
    let mut caps = Vec::new();
    let eq = eq_closure(fr, n, opts.cap)?;
    eq.require_complete()?;
    let Some((gq, _)) = enumerate_gq(fr, n, &K1Options { strategy: Strategy::Auto, ..*opts }, &mut caps)? else {
        return Err(Error::CapExceeded { cap: opts.cap });
    };
    let Some((small, _)) = enumerate_gq(fr, n - 1, &K1Options { strategy: Strategy::Auto, ..*opts }, &mut caps)? else {
        return Err(Error::CapExceeded { cap: opts.cap });
    };
    let embedded_inv: Vec<Mat<Elem>> = small.iter().map(|g| stab_embed(&**r, &gq_inverse(&**r, &g), Slot::Inner)).collect();
    let e = e_last(r, n);
    let results: Vec<Option<bool>> = (0..gq.order())
        .into_par_iter()
        .map(|i| {
            let d = gq.get(i);
            if mat_vec(&**r, &d, &e) != e {
                return None;
            }
            Some(eq.contains(&d) || embedded_inv.iter().any(|gi| eq.contains(&mat_mul(&**r, &d, gi))))
        })
        .collect();
    let checked = results.iter().flatten().count();
    let passed = results.iter().flatten().filter(|&&b| b).count();
    let counterexample = results.iter().position(|x| *x == Some(false)).map(|i| rows_json(r, &gq.get(i)));
    Ok(StabilizerReport {
        n,
        hypothesis: hypothesis(r, n),
        checked,
        skipped: results.len() - checked,
        passed,
        all_pass: checked == passed,
        counterexample,
        caps_hit: caps,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct WhiteheadReport {
    pub label: String,
    pub n: usize,
    pub gq_order: usize,
    pub eq_order: usize,
    pub commutator_order: usize,
    pub commutator_equals_eq: bool,
    pub commutator_in_eq: bool,
    pub caps_hit: Vec<String>,
}

/// `[GQ, GQ]` at a fixed level, compared with `EQ`. An experiment: the
/// identity `[GQ, GQ] = EQ` is a statement about the stable group.
pub fn whitehead_test(fr: &FormRing, n: usize, opts: &K1Options) -> Result<WhiteheadReport> {
    let r = &fr.ring;
    let k = k1_data(fr, n, opts)?;
    let Some(gq) = &k.gq else {
        return Err(Error::CapExceeded { cap: opts.cap });
    };
    let dim = 2 * n;
    let s: Vec<Mat<Elem>> = dedup_gens(r, dim, k.eq.gens.iter().cloned().chain(k.reps.iter().cloned()));
    let comm =
        |a: &Mat<Elem>, b: &Mat<Elem>| mat_mul(&**r, &mat_mul(&**r, &mat_mul(&**r, a, b), &gq_inverse(&**r, a)), &gq_inverse(&**r, b));
    let mut hgens = dedup_gens(r, dim, s.iter().flat_map(|a| s.iter().map(move |b| (a, b))).map(|(a, b)| comm(a, b)));
    let mut h = closure(r, dim, &hgens, opts.cap)?;
    loop {
        h.require_complete()?;
        let extra: Vec<Mat<Elem>> = s
            .iter()
            .flat_map(|x| hgens.iter().map(move |y| (x, y)))
            .map(|(x, y)| mat_mul(&**r, &mat_mul(&**r, x, y), &gq_inverse(&**r, x)))
            .filter(|c| !h.contains(c))
            .collect();
        if extra.is_empty() {
            break;
        }
        hgens = dedup_gens(r, dim, hgens.into_iter().chain(extra));
        h = closure(r, dim, &hgens, opts.cap)?;
    }
    let commutator_in_eq = h.iter().all(|m| k.eq.contains(&m));
    Ok(WhiteheadReport {
        label: "EXPERIMENT".into(),
        n,
        gq_order: gq.order(),
        eq_order: k.eq.order(),
        commutator_order: h.order(),
        commutator_equals_eq: commutator_in_eq && h.order() == k.eq.order(),
        commutator_in_eq,
        caps_hit: k.report.caps_hit.clone(),
    })
}

/// Wall-clock helper for reports.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let x = f();
    (x, t.elapsed().as_secs_f64())
}
