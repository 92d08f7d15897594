//! Commutator relations between elementary generators and the conjugation
//! rewrite built on them.
//!
//! Relations are derived, not transcribed: for each pair of generator
//! shapes the exact commutator `[x(a), y(b)] = x(a) y(b) x(a)^{-1} y(b)^{-1}`
//! is computed over sample rings, the parameters of the root elements it
//! factors into are read off at their primary positions and fitted against
//! short expressions in `a, conj(a), b, conj(b), lambda, conj(lambda)`.
//! Every accepted entry is then re-verified over `R[X]` on random
//! polynomial parameters.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{identity, Mat, Ring};
use crate::error::{Error, Result};
use crate::form_param::lambda_max;
use crate::poly::{Mono, Poly, PolyRing, Var};
use crate::quad::{apply_gen_right, Family, FormRing, GenMode, MAX_N};
use crate::ring::{Elem, RingCtx};
use crate::word::{Item, Letter, Word};

/// Generator shape `(family, i, j)`, indices 1-based.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Shape {
    pub fam: Family,
    pub i: usize,
    pub j: usize,
}

pub type Root = [i8; MAX_N];

impl Shape {
    pub fn new(fam: Family, i: usize, j: usize) -> Shape {
        Shape { fam, i, j }
    }

    pub fn of<P>(l: &Letter<P>) -> Shape {
        Shape::new(l.fam, l.i, l.j)
    }

    pub fn root(&self) -> Root {
        let mut r = [0i8; MAX_N];
        let (i, j) = (self.i - 1, self.j - 1);
        match self.fam {
            Family::Eps => {
                r[i] += 1;
                r[j] -= 1;
            }
            Family::R => {
                r[i] += 1;
                r[j] += 1;
            }
            Family::L => {
                r[i] -= 1;
                r[j] -= 1;
            }
        }
        r
    }

    /// Position of the parameter in the `2n x 2n` matrix, 0-based.
    pub fn primary(&self, n: usize) -> (usize, usize) {
        let (i, j) = (self.i - 1, self.j - 1);
        match self.fam {
            Family::Eps => (i, j),
            Family::R => (i, n + j),
            Family::L => (n + i, j),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        self.fam != Family::Eps && self.i == self.j
    }

    pub fn all(n: usize) -> Vec<Shape> {
        let mut out = Vec::new();
        for fam in Family::ALL {
            for i in 1..=n {
                for j in 1..=n {
                    if fam != Family::Eps || i != j {
                        out.push(Shape::new(fam, i, j));
                    }
                }
            }
        }
        out
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}{}", self.fam.name(), self.i, self.j)
    }
}

/// The canonical shape of a root (`r_ij`, `l_ij` with `i <= j`).
pub fn shape_of_root(r: &Root) -> Option<Shape> {
    let nz: Vec<(usize, i8)> = r.iter().enumerate().filter(|(_, &v)| v != 0).map(|(k, &v)| (k + 1, v)).collect();
    match nz.as_slice() {
        [(i, 2)] => Some(Shape::new(Family::R, *i, *i)),
        [(i, -2)] => Some(Shape::new(Family::L, *i, *i)),
        [(i, 1), (j, 1)] => Some(Shape::new(Family::R, *i, *j)),
        [(i, -1), (j, -1)] => Some(Shape::new(Family::L, *i, *j)),
        [(i, 1), (j, -1)] => Some(Shape::new(Family::Eps, *i, *j)),
        [(i, -1), (j, 1)] => Some(Shape::new(Family::Eps, *j, *i)),
        _ => None,
    }
}

fn root_add(a: &Root, b: &Root, ka: i8, kb: i8) -> Root {
    let mut r = [0i8; MAX_N];
    for k in 0..MAX_N {
        r[k] = ka * a[k] + kb * b[k];
    }
    r
}

/// Rewrite `r_ji`, `l_ji` with `i < j` in the canonical orientation:
/// `r_ji(b) = r_ij(-lambda conj b)` and `l_ji(b) = l_ij(-conj(lambda) conj b)`.
pub fn canonical_letter<R: Ring>(ring: &R, l: &Letter<R::El>) -> Letter<R::El> {
    if l.fam == Family::Eps || l.i <= l.j {
        return l.clone();
    }
    let lam = if l.fam == Family::R { ring.lambda() } else { ring.lambda_bar() };
    let p = ring.neg(&ring.mul(&lam, &ring.conj(&l.param)));
    Letter::new(l.fam, l.j, l.i, p)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    One,
    Lambda,
    LambdaBar,
}

/// `(+-) unit * a^pa conj(a)^qa * b^pb conj(b)^qb`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Term {
    pub neg: bool,
    pub unit: Unit,
    pub a: [u8; 2],
    pub b: [u8; 2],
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Expr {
    pub terms: Vec<Term>,
}

fn pow_el<R: Ring>(ring: &R, x: &R::El, k: u8) -> R::El {
    let mut acc = ring.one();
    for _ in 0..k {
        acc = ring.mul(&acc, x);
    }
    acc
}

impl Term {
    pub fn eval<R: Ring>(&self, ring: &R, a: &R::El, b: &R::El) -> R::El {
        let unit = match self.unit {
            Unit::One => ring.one(),
            Unit::Lambda => ring.lambda(),
            Unit::LambdaBar => ring.lambda_bar(),
        };
        let (ab, bb) = (ring.conj(a), ring.conj(b));
        let mut v = unit;
        for (x, k) in [(a, self.a[0]), (&ab, self.a[1]), (b, self.b[0]), (&bb, self.b[1])] {
            if k > 0 {
                v = ring.mul(&v, &pow_el(ring, x, k));
            }
        }
        if self.neg {
            ring.neg(&v)
        } else {
            v
        }
    }

    fn degrees(&self) -> (u8, u8) {
        (self.a[0] + self.a[1], self.b[0] + self.b[1])
    }
}

impl Expr {
    pub fn eval<R: Ring>(&self, ring: &R, a: &R::El, b: &R::El) -> R::El {
        self.terms.iter().fold(ring.zero(), |acc, t| ring.add(&acc, &t.eval(ring, a, b)))
    }

    /// `(deg_a, deg_b)` when all terms share it.
    pub fn homogeneous_degrees(&self) -> Option<(u8, u8)> {
        let d = self.terms.first()?.degrees();
        self.terms.iter().all(|t| t.degrees() == d).then_some(d)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, t) in self.terms.iter().enumerate() {
            let sign = if t.neg {
                "-"
            } else if k > 0 {
                "+"
            } else {
                ""
            };
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{sign}")?;
            let mut parts: Vec<String> = Vec::new();
            match t.unit {
                Unit::One => {}
                Unit::Lambda => parts.push("λ".into()),
                Unit::LambdaBar => parts.push("λ̄".into()),
            }
            for (name, k) in [("a", t.a[0]), ("ā", t.a[1]), ("b", t.b[0]), ("b̄", t.b[1])] {
                match k {
                    0 => {}
                    1 => parts.push(name.into()),
                    _ => parts.push(format!("{name}^{k}")),
                }
            }
            write!(f, "{}", parts.join("·"))?;
        }
        Ok(())
    }
}

/// Single terms with positive degree in both `a` and `b`, simplest first.
fn monomial_candidates() -> Vec<Term> {
    let exps: [[u8; 2]; 5] = [[1, 0], [0, 1], [2, 0], [1, 1], [0, 2]];
    let mut out = Vec::new();
    for a in exps {
        for b in exps {
            for unit in [Unit::One, Unit::Lambda, Unit::LambdaBar] {
                for neg in [false, true] {
                    out.push(Term { neg, unit, a, b });
                }
            }
        }
    }
    out.sort_by_key(|t| t.a[0] + t.a[1] + t.b[0] + t.b[1]);
    out
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pattern {
    pub x: Shape,
    pub y: Shape,
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}(a), {}(b)]", self.x, self.y)
    }
}

impl Pattern {
    /// Relabel indices in order of first appearance; also returns the map
    /// from canonical labels (1-based) back to the given ones.
    pub fn canonical(x: Shape, y: Shape) -> (Pattern, Vec<usize>) {
        let mut back: Vec<usize> = Vec::new();
        let mut label = |k: usize| match back.iter().position(|&b| b == k) {
            Some(p) => p + 1,
            None => {
                back.push(k);
                back.len()
            }
        };
        let x2 = Shape::new(x.fam, label(x.i), label(x.j));
        let y2 = Shape::new(y.fam, label(y.i), label(y.j));
        (Pattern { x: x2, y: y2 }, back)
    }

    pub fn index_count(&self) -> usize {
        [self.x.i, self.x.j, self.y.i, self.y.j].into_iter().max().unwrap_or(0)
    }

    pub fn is_opposite(&self) -> bool {
        root_add(&self.x.root(), &self.y.root(), 1, 1) == [0; MAX_N]
    }

    pub fn involves_only_eps(&self) -> bool {
        self.x.fam == Family::Eps && self.y.fam == Family::Eps
    }

    /// Roots `p x + q y` (p, q >= 1) that are roots, as canonical shapes.
    fn rhs_shapes(&self) -> Vec<Shape> {
        let (a, b) = (self.x.root(), self.y.root());
        let mut out = Vec::new();
        for (p, q) in [(1, 1), (2, 1), (1, 2)] {
            if let Some(s) = shape_of_root(&root_add(&a, &b, p, q)) {
                out.push(s);
            }
        }
        out
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Accepted,
    /// Opposite roots: the commutator is not a product of root elements.
    Excluded,
    Unresolved,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RhsLetter {
    pub shape: Shape,
    pub expr: Expr,
    pub display: String,
}

/// Verification stamp of one entry on one ring.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stamp {
    pub ring: String,
    pub base_pairs: usize,
    pub poly_pairs: usize,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub pattern: Pattern,
    pub status: Status,
    pub rhs: Vec<RhsLetter>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub stamps: Vec<Stamp>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSummary {
    pub eps_eps_total: usize,
    pub eps_eps_excluded: usize,
    pub eps_eps_resolved: usize,
    pub mixed_total: usize,
    pub mixed_excluded: usize,
    pub mixed_resolved: usize,
}

impl TableSummary {
    pub fn eps_eps_all_resolved(&self) -> bool {
        self.eps_eps_resolved + self.eps_eps_excluded == self.eps_eps_total
    }

    /// Resolved share of the mixed patterns that are not excluded.
    pub fn mixed_ratio(&self) -> f64 {
        let pool = self.mixed_total - self.mixed_excluded;
        if pool == 0 {
            1.0
        } else {
            self.mixed_resolved as f64 / pool as f64
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RelationTable {
    pub n: usize,
    pub relations: Vec<Relation>,
    #[serde(skip)]
    index: HashMap<Pattern, usize>,
}

impl RelationTable {
    pub fn new(n: usize, relations: Vec<Relation>) -> RelationTable {
        let index = relations.iter().enumerate().map(|(k, r)| (r.pattern, k)).collect();
        RelationTable { n, relations, index }
    }

    pub fn from_json(v: &serde_json::Value) -> Result<RelationTable> {
        let t: RelationTable = serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        Ok(RelationTable::new(t.n, t.relations))
    }

    pub fn get(&self, p: &Pattern) -> Option<&Relation> {
        self.index.get(p).map(|&k| &self.relations[k])
    }

    /// Right-hand side of `[x(a), y(b)]` in the given indices.
    pub fn lookup(&self, x: Shape, y: Shape) -> Result<Vec<RhsLetter>> {
        let (p, back) = Pattern::canonical(x, y);
        let rel = self.get(&p).ok_or_else(|| Error::UnresolvedRelation(format!("[{x}, {y}] (outside a table of rank {})", self.n)))?;
        match rel.status {
            Status::Accepted => Ok(rel
                .rhs
                .iter()
                .map(|l| {
                    let s = Shape::new(l.shape.fam, back[l.shape.i - 1], back[l.shape.j - 1]);
                    RhsLetter { shape: s, expr: l.expr.clone(), display: l.display.clone() }
                })
                .collect()),
            Status::Excluded => Err(Error::UnresolvedRelation(format!("[{x}, {y}] has opposite roots"))),
            Status::Unresolved => Err(Error::UnresolvedRelation(format!("[{x}, {y}]"))),
        }
    }

    pub fn summary(&self) -> TableSummary {
        let mut s = TableSummary::default();
        for r in &self.relations {
            let (total, excl, res) = if r.pattern.involves_only_eps() {
                (&mut s.eps_eps_total, &mut s.eps_eps_excluded, &mut s.eps_eps_resolved)
            } else {
                (&mut s.mixed_total, &mut s.mixed_excluded, &mut s.mixed_resolved)
            };
            *total += 1;
            match r.status {
                Status::Accepted => *res += 1,
                Status::Excluded => *excl += 1,
                Status::Unresolved => {}
            }
        }
        s
    }
}

/// The three sample form rings `Z/6 (lambda = -1)`, `F_5 (lambda = -1)`,
/// `GaussMod 3 (lambda = i)`, each with `Lambda_max`.
pub fn default_sample_rings() -> Vec<Arc<FormRing>> {
    ["Zmod 6, trivial, lambda=-1", "GF 5, trivial, lambda=-1", "GaussMod 3, conj, lambda=i"]
        .iter()
        .map(|s| FormRing::new(lambda_max(&RingCtx::parse(s).expect("sample ring")), GenMode::Strict))
        .collect()
}

pub fn commutator<R: Ring>(ring: &R, n: usize, x: Shape, a: &R::El, y: Shape, b: &R::El) -> Mat<R::El> {
    let mut m = identity(ring, 2 * n);
    let (na, nb) = (ring.neg(a), ring.neg(b));
    for (s, p) in [(x, a), (y, b), (x, &na), (y, &nb)] {
        apply_gen_right(ring, &mut m, s.fam, s.i, s.j, p);
    }
    m
}

fn rhs_product<R: Ring>(ring: &R, n: usize, letters: &[(Shape, R::El)]) -> Mat<R::El> {
    let mut m = identity(ring, 2 * n);
    for (s, p) in letters {
        apply_gen_right(ring, &mut m, s.fam, s.i, s.j, p);
    }
    m
}

fn admissible_base(fr: &FormRing, s: Shape) -> Vec<Elem> {
    fr.ring.elements().filter(|&a| !s.is_diagonal() || fr.diag_ok(s.fam, a)).collect()
}

fn random_param(fr: &FormRing, s: Shape, rng: &mut ChaCha8Rng) -> Poly {
    let pool = admissible_base(fr, s);
    let coeffs: Vec<Elem> = (0..=rng.random_range(1..=3usize)).map(|_| pool[rng.random_range(0..pool.len())]).collect();
    Poly::from_coeffs(&coeffs)
}

/// Parameter pairs used to verify a pattern over `R[X]`; diagonal
/// parameters take coefficients in `Lambda_max`.
fn poly_pairs(fr: &FormRing, p: &Pattern, count: usize, seed: u64) -> Vec<(Poly, Poly)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| (random_param(fr, p.x, &mut rng), random_param(fr, p.y, &mut rng))).collect()
}

fn pattern_seed(seed: u64, p: &Pattern) -> u64 {
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
    for v in [p.x.fam as usize, p.x.i, p.x.j, p.y.fam as usize, p.y.i, p.y.j] {
        h = h.wrapping_mul(0x100_0000_01b3).wrapping_add(v as u64 + 1);
    }
    h
}

/// Check an accepted right-hand side as a matrix identity on given pairs.
pub fn verify_on<R: Ring>(ring: &R, n: usize, p: &Pattern, rhs: &[RhsLetter], pairs: &[(R::El, R::El)]) -> bool {
    pairs.iter().all(|(a, b)| {
        let c = commutator(ring, n, p.x, a, p.y, b);
        let letters: Vec<(Shape, R::El)> = rhs.iter().map(|l| (l.shape, l.expr.eval(ring, a, b))).collect();
        c == rhs_product(ring, n, &letters)
    })
}

struct BaseSamples {
    pairs: Vec<(Elem, Elem)>,
    /// `values[k][s]`: parameter of the `k`-th candidate letter on sample `s`.
    values: Vec<Vec<Elem>>,
}

fn base_samples(fr: &FormRing, n: usize, p: &Pattern, cands: &[Shape]) -> std::result::Result<BaseSamples, String> {
    let r = &*fr.ring;
    let (xs, ys) = (admissible_base(fr, p.x), admissible_base(fr, p.y));
    let mut pairs = Vec::new();
    let mut values = vec![Vec::new(); cands.len()];
    for &a in &xs {
        for &b in &ys {
            let c = commutator(r, n, p.x, &a, p.y, &b);
            let letters: Vec<(Shape, Elem)> = cands.iter().map(|s| (*s, *c.get(s.primary(n).0, s.primary(n).1))).collect();
            if rhs_product(r, n, &letters) != c {
                return Err(format!("commutator is not a product of root elements over {}", r.description()));
            }
            for (k, (_, v)) in letters.iter().enumerate() {
                values[k].push(*v);
            }
            pairs.push((a, b));
        }
    }
    Ok(BaseSamples { pairs, values })
}

fn term_values(r: &RingCtx, t: &Term, pairs: &[(Elem, Elem)]) -> Vec<Elem> {
    pairs.iter().map(|(a, b)| t.eval(r, a, b)).collect()
}

/// All expressions (one term, then two) matching every ring's samples.
fn fit(rings: &[Arc<FormRing>], samples: &[BaseSamples], k: usize, monos: &[Term]) -> Vec<Expr> {
    let tables: Vec<Vec<Vec<Elem>>> =
        rings.iter().zip(samples).map(|(fr, s)| monos.iter().map(|t| term_values(&fr.ring, t, &s.pairs)).collect()).collect();
    let target: Vec<&Vec<Elem>> = samples.iter().map(|s| &s.values[k]).collect();
    let mut out: Vec<Expr> = (0..monos.len())
        .filter(|&m| (0..rings.len()).all(|ri| tables[ri][m] == *target[ri]))
        .map(|m| Expr { terms: vec![monos[m]] })
        .collect();
    if !out.is_empty() {
        return out;
    }
    for m1 in 0..monos.len() {
        for m2 in m1 + 1..monos.len() {
            let ok = (0..rings.len()).all(|ri| {
                let r = &rings[ri].ring;
                let (v1, v2) = (&tables[ri][m1], &tables[ri][m2]);
                v1.iter().zip(v2).zip(target[ri]).all(|((x, y), t)| r.add_e(*x, *y) == *t)
            });
            if ok {
                out.push(Expr { terms: vec![monos[m1], monos[m2]] });
            }
        }
    }
    out
}

fn derive_one(rings: &[Arc<FormRing>], n: usize, p: Pattern, poly_count: usize, seed: u64, monos: &[Term]) -> Relation {
    let unresolved = |note: String| Relation { pattern: p, status: Status::Unresolved, rhs: vec![], note: Some(note), stamps: vec![] };
    if p.is_opposite() {
        return Relation { pattern: p, status: Status::Excluded, rhs: vec![], note: Some("opposite roots".into()), stamps: vec![] };
    }
    let cands = p.rhs_shapes();
    let mut samples = Vec::new();
    for fr in rings {
        match base_samples(fr, n, &p, &cands) {
            Ok(s) => samples.push(s),
            Err(e) => return unresolved(e),
        }
    }
    let polys: Vec<(PolyRing, Vec<(Poly, Poly)>)> =
        rings.iter().map(|fr| (PolyRing::new(&fr.ring), poly_pairs(fr, &p, poly_count, pattern_seed(seed, &p)))).collect();
    let mut rhs = Vec::new();
    for (k, s) in cands.iter().enumerate() {
        if samples.iter().all(|smp| smp.values[k].iter().all(|v| *v == Elem(0))) {
            continue;
        }
        let fits = fit(rings, &samples, k, monos);
        let (row, col) = s.primary(n);
        let chosen = fits.into_iter().find(|e| {
            polys.iter().all(|(pr, pairs)| pairs.iter().all(|(a, b)| *commutator(pr, n, p.x, a, p.y, b).get(row, col) == e.eval(pr, a, b)))
        });
        match chosen {
            Some(e) => rhs.push(RhsLetter { shape: *s, display: e.to_string(), expr: e }),
            None => return unresolved(format!("no expression of degree <= 2 fits the {s} parameter")),
        }
    }
    let mut stamps = Vec::new();
    for ((fr, smp), (pr, pairs)) in rings.iter().zip(&samples).zip(&polys) {
        let ok = verify_on(&*fr.ring, n, &p, &rhs, &smp.pairs) && verify_on(pr, n, &p, &rhs, pairs) && pr.check_overflow().is_ok();
        stamps.push(Stamp { ring: fr.ring.description().to_string(), base_pairs: smp.pairs.len(), poly_pairs: pairs.len(), ok });
    }
    if stamps.iter().any(|s| !s.ok) {
        return Relation { stamps, ..unresolved("candidate failed the matrix identity check".into()) };
    }
    Relation { pattern: p, status: Status::Accepted, rhs, note: None, stamps }
}

/// All patterns of two generator shapes in rank `n`, up to relabeling.
pub fn patterns(n: usize) -> Vec<Pattern> {
    let shapes = Shape::all(n);
    let mut set = BTreeSet::new();
    for &x in &shapes {
        for &y in &shapes {
            set.insert(Pattern::canonical(x, y).0);
        }
    }
    set.into_iter().collect()
}

/// Derive the relation table in rank `n` over the sample rings; each
/// accepted entry is verified on every base pair and on `poly_count`
/// random pairs over `R[X]` per ring.
pub fn derive_relation_table(n: usize, rings: &[Arc<FormRing>], poly_count: usize, seed: u64) -> RelationTable {
    let monos = monomial_candidates();
    let relations: Vec<Relation> = patterns(n).into_par_iter().map(|p| derive_one(rings, n, p, poly_count, seed, &monos)).collect();
    RelationTable::new(n, relations)
}

/// Re-verify every accepted entry over another form ring, stamping it.
/// Returns the patterns that fail.
pub fn verify_table(table: &mut RelationTable, fr: &FormRing, poly_count: usize, seed: u64) -> Vec<Pattern> {
    let n = table.n;
    let stamps: Vec<Option<Stamp>> = table
        .relations
        .par_iter()
        .map(|rel| {
            if rel.status != Status::Accepted {
                return None;
            }
            let r = &*fr.ring;
            let (xs, ys) = (admissible_base(fr, rel.pattern.x), admissible_base(fr, rel.pattern.y));
            let mut base: Vec<(Elem, Elem)> = xs.iter().flat_map(|&a| ys.iter().map(move |&b| (a, b))).collect();
            if base.len() > 400 {
                let mut rng = ChaCha8Rng::seed_from_u64(pattern_seed(seed, &rel.pattern));
                base = (0..400).map(|_| base[rng.random_range(0..base.len())]).collect();
            }
            let pr = PolyRing::new(&fr.ring);
            let pairs = poly_pairs(fr, &rel.pattern, poly_count, pattern_seed(seed, &rel.pattern));
            let ok = verify_on(r, n, &rel.pattern, &rel.rhs, &base)
                && verify_on(&pr, n, &rel.pattern, &rel.rhs, &pairs)
                && pr.check_overflow().is_ok();
            Some(Stamp { ring: r.description().to_string(), base_pairs: base.len(), poly_pairs: pairs.len(), ok })
        })
        .collect();
    let mut failing = Vec::new();
    for (rel, st) in table.relations.iter_mut().zip(stamps) {
        if let Some(st) = st {
            if !st.ok {
                failing.push(rel.pattern);
                rel.status = Status::Unresolved;
                rel.note = Some(format!("failed on {}", st.ring));
            }
            rel.stamps.retain(|s| s.ring != st.ring);
            rel.stamps.push(st);
        }
    }
    failing
}

/// Conjugation rewriting over a polynomial ring: `eps g eps^{-1}` as a
/// product of letters whose parameters keep a large valuation in `var`.
pub struct Rewriter<'a> {
    pub table: &'a RelationTable,
    pub fr: &'a FormRing,
    pub pr: &'a PolyRing,
    pub n: usize,
    pub var: Var,
}

/// How `x_alpha(b)` for a single monomial `b` is written as a commutator.
struct Split {
    h1: Letter<Poly>,
    h2: Letter<Poly>,
    others: Vec<Letter<Poly>>,
    score: u32,
}

impl Rewriter<'_> {
    fn val(&self, p: &Poly) -> u32 {
        p.valuation(self.var).unwrap_or(u32::MAX)
    }

    /// `[eps, g] g` read from the table; fails on opposite roots.
    fn conjugate_plain(&self, eps: &Letter<Poly>, g: &Letter<Poly>) -> Result<Vec<Letter<Poly>>> {
        let rhs = self.table.lookup(Shape::of(eps), Shape::of(g))?;
        let mut out = Vec::with_capacity(rhs.len() + 1);
        for l in rhs {
            let p = l.expr.eval(self.pr, &eps.param, &g.param);
            if !p.is_zero() {
                out.push(Letter::new(l.shape.fam, l.shape.i, l.shape.j, p));
            }
        }
        out.push(g.clone());
        Ok(out)
    }

    /// `eps g eps^{-1}` as letters; every output parameter has valuation
    /// at least `target` or the call fails.
    pub fn conjugate(&self, eps: &Letter<Poly>, g: &Letter<Poly>, target: u32) -> Result<Vec<Letter<Poly>>> {
        if eps.param.is_zero() {
            return Ok(vec![g.clone()]);
        }
        if g.param.is_zero() {
            return Ok(vec![]);
        }
        let opposite = root_add(&Shape::of(eps).root(), &Shape::of(g).root(), 1, 1) == [0; MAX_N];
        let out = if opposite {
            let mut out = Vec::new();
            for piece in self.split_opposite(g, target)? {
                out.extend(self.conjugate_plain(eps, &piece)?);
            }
            out
        } else {
            self.conjugate_plain(eps, g)?
        };
        if let Some(bad) = out.iter().find(|l| self.val(&l.param) < target) {
            return Err(Error::UnresolvedRelation(format!(
                "conjugating {} by {} leaves {} below valuation {target}",
                Shape::of(g),
                Shape::of(eps),
                Shape::of(bad)
            )));
        }
        Ok(out)
    }

    /// Conjugate letters by a word `e_1 ... e_L`, innermost letter first.
    pub fn conjugate_by_word(&self, conj: &[Letter<Poly>], inner: Vec<Letter<Poly>>, target: u32) -> Result<Vec<Letter<Poly>>> {
        let mut cur = inner;
        for e in conj.iter().rev() {
            let mut next = Vec::with_capacity(cur.len() * 2);
            for g in &cur {
                next.extend(self.conjugate(e, g, target)?);
            }
            cur = next;
        }
        Ok(cur)
    }

    /// Write `g = x_alpha(b)` as a product of letters none of which lies on
    /// the root `alpha`, through `x_alpha(c M) = [h1(p), h2(q)] * others^{-1}`
    /// for each monomial `c M` of `b`.
    fn split_opposite(&self, g: &Letter<Poly>, target: u32) -> Result<Vec<Letter<Poly>>> {
        let g = canonical_letter(self.pr, g);
        let alpha = Shape::of(&g);
        let mut out = Vec::new();
        for &(m, c) in g.param.terms() {
            let s = self
                .best_split(alpha, m, c, target)
                .ok_or_else(|| Error::UnresolvedRelation(format!("no commutator splitting of {alpha} reaches valuation {target}")))?;
            let neg = |l: &Letter<Poly>| l.with_param(self.pr.neg(&l.param));
            out.push(s.h1.clone());
            out.push(s.h2.clone());
            out.push(neg(&s.h1));
            out.push(neg(&s.h2));
            out.extend(s.others.iter().map(neg));
        }
        Ok(out)
    }

    fn best_split(&self, alpha: Shape, m: Mono, c: Elem, target: u32) -> Option<Split> {
        let r = &*self.pr.base().clone();
        let ar = alpha.root();
        let shapes = Shape::all(self.n);
        let bound = m.exp(self.var) / 2;
        let mut best: Option<Split> = None;
        for &x in &shapes {
            for &y in &shapes {
                if x.root() == ar || y.root() == ar {
                    continue;
                }
                let Ok(rhs) = self.table.lookup(x, y) else { continue };
                let Some(main) = rhs.iter().find(|l| l.shape.root() == ar) else { continue };
                // after relabeling the letter may come as r_ji or l_ji
                let want = if main.shape == alpha {
                    c
                } else {
                    let lam = if alpha.fam == Family::R { r.lambda_el() } else { r.conj_e(r.lambda_el()) };
                    r.neg_e(r.mul_e(lam, r.conj_e(c)))
                };
                let Some((dp, dq)) = main.expr.homogeneous_degrees() else { continue };
                let coeffs: Vec<(Elem, Elem)> =
                    r.elements().flat_map(|u| r.elements().map(move |v| (u, v))).filter(|(u, v)| main.expr.eval(r, u, v) == want).collect();
                if coeffs.is_empty() {
                    continue;
                }
                for (mp, mq) in mono_splits(m, dp as u32, dq as u32, self.var) {
                    let score = mp.exp(self.var).min(mq.exp(self.var));
                    if score < target || best.as_ref().is_some_and(|b| b.score >= score) {
                        continue;
                    }
                    for &(u, v) in &coeffs {
                        let p = Poly::term(u, mp);
                        let q = Poly::term(v, mq);
                        let h1 = Letter::new(x.fam, x.i, x.j, p.clone());
                        let h2 = Letter::new(y.fam, y.i, y.j, q.clone());
                        if (x.is_diagonal() && !self.fr.diag_ok_poly(x.fam, &h1.param))
                            || (y.is_diagonal() && !self.fr.diag_ok_poly(y.fam, &h2.param))
                        {
                            continue;
                        }
                        let others: Vec<Letter<Poly>> = rhs
                            .iter()
                            .filter(|l| l.shape.root() != ar)
                            .map(|l| Letter::new(l.shape.fam, l.shape.i, l.shape.j, l.expr.eval(self.pr, &p, &q)))
                            .filter(|l| !l.param.is_zero())
                            .collect();
                        if others.iter().any(|l| l.is_diagonal() && !self.fr.diag_ok_poly(l.fam, &l.param)) {
                            continue;
                        }
                        best = Some(Split { h1, h2, others, score });
                        break;
                    }
                    if best.as_ref().is_some_and(|b| b.score >= bound) {
                        return best;
                    }
                }
            }
        }
        best
    }
}

/// Ways to write `m = mp^dp * mq^dq`, one representative per parity class
/// in the variables other than `var`, best `var`-valuation first.
fn mono_splits(m: Mono, dp: u32, dq: u32, var: Var) -> Vec<(Mono, Mono)> {
    let per_var = |e: u32, keep_all: bool| -> Vec<(u32, u32)> {
        let mut seen = BTreeMap::new();
        for a in 0..=e / dp {
            let rest = e - dp * a;
            if rest.is_multiple_of(dq) {
                let b = rest / dq;
                let key = if keep_all { (a, b) } else { (a % 2, b % 2) };
                seen.entry(key).or_insert((a, b));
            }
        }
        seen.into_values().collect()
    };
    let vars = [Var::X, Var::T, Var::U];
    let lists: Vec<Vec<(u32, u32)>> = vars.iter().map(|&v| per_var(m.exp(v), v == var)).collect();
    let mut out = Vec::new();
    for &(xa, xb) in &lists[0] {
        for &(ta, tb) in &lists[1] {
            for &(ua, ub) in &lists[2] {
                out.push((Mono::new(xa, ta, ua), Mono::new(xb, tb, ub)));
            }
        }
    }
    out.sort_by_key(|(p, q)| std::cmp::Reverse(p.exp(var).min(q.exp(var))));
    out
}

/// `eps g eps^{-1}` for a base-ring letter `eps` and a letter `g` over
/// `R[X]` congruent to the identity modulo `X^{2m}`: a word whose letters
/// are all congruent to the identity modulo `X^m`.
pub fn conjugate_letter(
    table: &RelationTable,
    fr: &FormRing,
    pr: &PolyRing,
    eps: &Letter<Elem>,
    g: &Letter<Poly>,
    m: u32,
) -> Result<Word<Poly>> {
    let n = table.n.max(eps.i).max(eps.j).max(g.i).max(g.j);
    if g.param.valuation(Var::X).is_some_and(|v| v < 2 * m) {
        return Err(Error::PreconditionViolated(format!("parameter of {} is not in (X^{})", Shape::of(g), 2 * m)));
    }
    let rw = Rewriter { table, fr, pr, n, var: Var::X };
    let e = eps.with_param(Poly::constant(eps.param));
    let letters = rw.conjugate(&e, g, m)?;
    pr.check_overflow()?;
    Ok(Word { n, items: letters.into_iter().map(Item::Gen).collect() })
}

#[cfg(test)]
mod tests {
    use std::sync::OnceLock;

    use super::*;
    use crate::algebra::mat_mul;
    use crate::word::{inverse, word_eval};

    fn table() -> &'static RelationTable {
        static T: OnceLock<RelationTable> = OnceLock::new();
        T.get_or_init(|| derive_relation_table(3, &default_sample_rings(), 40, 7))
    }

    #[test]
    fn roots_and_shapes() {
        for s in Shape::all(4) {
            let c = shape_of_root(&s.root()).unwrap();
            assert_eq!(c.root(), s.root());
            assert!(c.fam == Family::Eps || c.i <= c.j);
        }
        assert_eq!(
            shape_of_root(&root_add(&Shape::new(Family::Eps, 1, 2).root(), &Shape::new(Family::Eps, 2, 3).root(), 1, 1)),
            Some(Shape::new(Family::Eps, 1, 3))
        );
        let (p, back) = Pattern::canonical(Shape::new(Family::Eps, 3, 1), Shape::new(Family::R, 1, 4));
        assert_eq!(p, Pattern { x: Shape::new(Family::Eps, 1, 2), y: Shape::new(Family::R, 2, 3) });
        assert_eq!(back, vec![3, 1, 4]);
    }

    #[test]
    fn canonical_orientation_is_the_same_matrix() {
        for fr in default_sample_rings() {
            let r = &fr.ring;
            for fam in [Family::R, Family::L] {
                for a in r.elements() {
                    let l = Letter::new(fam, 2, 1, a);
                    let c = canonical_letter(r, &l);
                    assert_eq!((c.i, c.j), (1, 2));
                    assert_eq!(crate::quad::gen_matrix(r, 2, fam, 2, 1, &a), crate::quad::gen_matrix(r, 2, fam, 1, 2, &c.param));
                }
            }
        }
    }

    #[test]
    fn table_meets_coverage() {
        let t = table();
        let s = t.summary();
        assert!(s.eps_eps_all_resolved(), "{s:?}");
        assert!(s.mixed_ratio() >= 0.8, "{s:?}");
        for rel in &t.relations {
            if rel.status == Status::Accepted {
                assert_eq!(rel.stamps.len(), 3);
                assert!(rel.stamps.iter().all(|st| st.ok));
            }
        }
    }

    #[test]
    fn eps_chain_is_single_product() {
        // oracle: I + a e_12 and I + b e_23 commute to I + ab e_13 on the upper block
        let t = table();
        let rhs = t.lookup(Shape::new(Family::Eps, 1, 2), Shape::new(Family::Eps, 2, 3)).unwrap();
        assert_eq!(rhs.len(), 1);
        assert_eq!(rhs[0].shape, Shape::new(Family::Eps, 1, 3));
        assert_eq!(rhs[0].display, "a·b");
        assert!(t.lookup(Shape::new(Family::Eps, 1, 2), Shape::new(Family::Eps, 3, 1)).unwrap().len() == 1);
        assert!(t.lookup(Shape::new(Family::Eps, 1, 2), Shape::new(Family::R, 3, 3)).unwrap().is_empty());
        assert!(matches!(t.lookup(Shape::new(Family::Eps, 1, 2), Shape::new(Family::Eps, 2, 1)), Err(Error::UnresolvedRelation(_))));
    }

    #[test]
    fn table_holds_in_other_rings() {
        let mut t = table().clone();
        for spec in ["Zmod 12, trivial, lambda=-1", "Zmod 4, trivial, lambda=1", "GaussMod 5, conj, lambda=1"] {
            let fr = FormRing::new(lambda_max(&RingCtx::parse(spec).unwrap()), GenMode::Strict);
            assert!(verify_table(&mut t, &fr, 10, 1).is_empty(), "{spec}");
        }
        let json = serde_json::to_value(&t).unwrap();
        let back = RelationTable::from_json(&json).unwrap();
        assert_eq!(back.relations, t.relations);
        assert!(back.get(&t.relations[0].pattern).is_some());
    }

    fn check_conjugation(pr: &PolyRing, n: usize, eps: &Letter<Poly>, g: &Letter<Poly>, out: &[Letter<Poly>]) {
        let lhs = {
            let e = Word::from_letters(n, [eps.clone()]);
            let mut w = e.clone();
            w.push(g.clone());
            w.extend(&inverse(pr, &e));
            word_eval(pr, &w)
        };
        assert_eq!(word_eval(pr, &Word::from_letters(n, out.iter().cloned())), lhs);
    }

    #[test]
    fn conjugate_letter_examples() {
        let t = table();
        let r = RingCtx::parse("Zmod 6, trivial, lambda=-1").unwrap();
        let fr = FormRing::new(lambda_max(&r), GenMode::Strict);
        let pr = PolyRing::new(&r);
        let g = Letter::new(Family::Eps, 2, 3, Poly::monomial(Elem(5), 2, 0));
        let w = conjugate_letter(t, &fr, &pr, &Letter::new(Family::Eps, 1, 2, Elem(0)), &g, 1).unwrap();
        assert_eq!(w.items, vec![Item::Gen(g.clone())]);
        let eps = Letter::new(Family::Eps, 1, 2, Elem(4));
        let w = conjugate_letter(t, &fr, &pr, &eps, &g, 1).unwrap();
        let out: Vec<Letter<Poly>> = crate::word::flatten(&pr, &w);
        assert!(out.iter().all(|l| l.param.valuation(Var::X).unwrap() >= 1));
        check_conjugation(&pr, 3, &eps.with_param(Poly::constant(Elem(4))), &g, &out);
        let low = Letter::new(Family::Eps, 2, 3, Poly::monomial(Elem(1), 1, 0));
        assert!(matches!(conjugate_letter(t, &fr, &pr, &eps, &low, 1), Err(Error::PreconditionViolated(_))));
    }

    #[test]
    fn opposite_roots_are_halved() {
        let t = table();
        for (spec, n) in [("Zmod 6, trivial, lambda=-1", 2), ("Zmod 6, trivial, lambda=-1", 3), ("GaussMod 3, conj, lambda=i", 2)] {
            let r = RingCtx::parse(spec).unwrap();
            let fr = FormRing::new(lambda_max(&r), GenMode::Strict);
            let pr = PolyRing::new(&r);
            let rw = Rewriter { table: t, fr: &fr, pr: &pr, n, var: Var::X };
            let one = r.one_el();
            for s in Shape::all(n) {
                let opp = shape_of_root(&root_add(&s.root(), &[0; MAX_N], -1, 0)).unwrap();
                let pick =
                    |sh: Shape| if sh.is_diagonal() { r.elements().find(|&a| a != Elem(0) && fr.diag_ok(sh.fam, a)).unwrap() } else { one };
                let eps = Letter::new(opp.fam, opp.i, opp.j, Poly::constant(pick(opp)));
                let b = pick(s);
                // valuation 4 leaves room for the quadratic splitting of long roots
                let g = Letter::new(s.fam, s.i, s.j, Poly::monomial(b, 4, 0));
                let out = rw.conjugate(&eps, &g, 1).unwrap_or_else(|e| panic!("{spec} n={n} {s}: {e}"));
                check_conjugation(&pr, n, &eps, &g, &out);
            }
        }
    }

    #[test]
    fn word_conjugation_matches_matrices() {
        let t = table();
        let r = RingCtx::parse("Zmod 6, trivial, lambda=-1").unwrap();
        let fr = FormRing::new(lambda_max(&r), GenMode::Strict);
        let pr = PolyRing::with_cap(&r, 256);
        let rw = Rewriter { table: t, fr: &fr, pr: &pr, n: 2, var: Var::X };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let shapes = Shape::all(2);
        for _ in 0..20 {
            let conj: Vec<Letter<Poly>> = (0..3)
                .map(|_| {
                    let s = shapes[rng.random_range(0..shapes.len())];
                    Letter::new(s.fam, s.i, s.j, Poly::constant(Elem(rng.random_range(0..6u16))))
                })
                .collect();
            let s = shapes[rng.random_range(0..shapes.len())];
            let g = Letter::new(s.fam, s.i, s.j, Poly::monomial(Elem(rng.random_range(1..6u16)), 8, 0));
            let out = rw.conjugate_by_word(&conj, vec![g.clone()], 1).unwrap();
            let cw = Word::from_letters(2, conj);
            let expect = mat_mul(
                &pr,
                &mat_mul(&pr, &word_eval(&pr, &cw), &word_eval(&pr, &Word::from_letters(2, [g]))),
                &word_eval(&pr, &inverse(&pr, &cw)),
            );
            assert_eq!(word_eval(&pr, &Word::from_letters(2, out)), expect);
            pr.check_overflow().unwrap();
        }
    }
}
