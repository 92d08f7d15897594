//! Acceptance run: one PASS/FAIL line per criterion. Exits non-zero if any
//! criterion fails.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use formring::algebra::mat_mul;
use formring::form_param::{enumerate_form_params, lambda_max, lambda_min};
use formring::glue::{check_localization_injectivity, dilate, loc_mat, loc_word, local_global_glue, random_instance, DilateOptions};
use formring::k1::{enum_gq_bruteforce, eq_closure, k1_compute, stab_map_test, unimodular_orbit_test, K1Options, Strategy, DEFAULT_CAP};
use formring::poly::{Poly, PolyRing, Subst};
use formring::quad::{all_generators, is_in_gq, stab_embed, FormRing, GenMode, Slot};
use formring::relations::{default_sample_rings, derive_relation_table, verify_table, Status};
use formring::ring::{localize_at, Elem, Ideal, RingCtx};
use formring::word::{prefix_conjugate, word_eval, Letter, Word};

struct Verdict {
    ok: bool,
    detail: String,
}

fn verdict(ok: bool, detail: impl Into<String>) -> Verdict {
    Verdict { ok, detail: detail.into() }
}

fn form_ring(spec: &str, lambda: &str) -> Arc<FormRing> {
    let r = RingCtx::parse(spec).unwrap();
    let l = if lambda == "min" { lambda_min(&r) } else { lambda_max(&r) };
    FormRing::new(l, GenMode::Strict)
}

/// Every admissible `(lambda, Lambda)` over the test rings.
fn form_ring_grid() -> Vec<Arc<FormRing>> {
    let bases = [
        "GF 2, trivial, lambda=1",
        "GF 3, trivial, lambda=1",
        "Zmod 4, trivial, lambda=1",
        "Zmod 6, trivial, lambda=1",
        "GaussMod 3, trivial, lambda=1",
        "GaussMod 3, conj, lambda=1",
    ];
    let mut out = Vec::new();
    for spec in bases {
        let base = RingCtx::parse(spec).unwrap();
        for l in base.elements() {
            let Ok(r) = base.with_lambda(l) else { continue };
            let r = Arc::new(r);
            for fp in enumerate_form_params(&r, 10_000).unwrap() {
                out.push(FormRing::new(fp, GenMode::Strict));
            }
        }
    }
    out
}

fn generator_validity() -> Verdict {
    let mut checked = 0usize;
    let mut bad = Vec::new();
    let grid = form_ring_grid();
    for fr in &grid {
        for n in [2, 3] {
            for (fam, i, j, a) in all_generators(fr, n) {
                checked += 1;
                let m = formring::quad::elem(fr, n, fam, i, j, a).unwrap();
                if !is_in_gq(fr, &m) {
                    bad.push(format!("{} {fam:?}{i}{j}({})", fr.ring.description(), fr.ring.label(a)));
                }
            }
        }
    }
    verdict(bad.is_empty(), format!("{} form rings, {checked} generators, {} outside GQ {:?}", grid.len(), bad.len(), bad.first()))
}

fn splitting_lemma() -> Verdict {
    let mut checked = 0usize;
    let mut bad = 0usize;
    for fr in form_ring_grid() {
        let r = &fr.ring;
        for n in [2, 3] {
            let mut shapes: BTreeMap<(usize, usize, usize), (formring::quad::Family, Vec<Elem>)> = BTreeMap::new();
            for (fam, i, j, a) in all_generators(&fr, n) {
                shapes.entry((fam as usize, i, j)).or_insert_with(|| (fam, vec![Elem(0)])).1.push(a);
            }
            for ((_, i, j), (fam, params)) in shapes {
                for &x in &params {
                    for &y in &params {
                        checked += 1;
                        let lhs = formring::quad::elem(&fr, n, fam, i, j, r.add_e(x, y)).unwrap();
                        let rhs = mat_mul(
                            &**r,
                            &formring::quad::elem(&fr, n, fam, i, j, x).unwrap(),
                            &formring::quad::elem(&fr, n, fam, i, j, y).unwrap(),
                        );
                        bad += usize::from(lhs != rhs);
                    }
                }
            }
        }
    }
    verdict(bad == 0, format!("{checked} pairs, {bad} failures"))
}

fn prefix_identity() -> Verdict {
    let fr = form_ring("Zmod 6, trivial, lambda=-1", "max");
    let r = &fr.ring;
    let gens = all_generators(&fr, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut bad = 0;
    for _ in 0..500 {
        let len = rng.random_range(0..=8usize);
        let letters: Vec<Letter<Elem>> = (0..len)
            .map(|_| {
                let (fam, i, j, a) = gens[rng.random_range(0..gens.len())];
                Letter::new(fam, i, j, a)
            })
            .collect();
        let mut pairs = Vec::new();
        let mut rest = &letters[..];
        while !rest.is_empty() {
            let ka = rng.random_range(0..=rest.len());
            let (a, tail) = rest.split_at(ka);
            let kb = rng.random_range(0..=tail.len());
            let (b, tail) = tail.split_at(kb);
            pairs.push((Word::from_letters(2, a.to_vec()), Word::from_letters(2, b.to_vec())));
            rest = tail;
        }
        let plain = Word::from_letters(2, letters.clone());
        let pc = prefix_conjugate::<Arc<RingCtx>>(2, &pairs);
        bad += usize::from(word_eval(r, &pc) != word_eval(r, &plain));
    }
    verdict(bad == 0, format!("500 words, {bad} mismatches"))
}

fn relation_table() -> Verdict {
    let rings = default_sample_rings();
    let mut table = derive_relation_table(3, &rings, 200, 11);
    let s = table.summary();
    let stamped = table.relations.iter().filter(|r| r.status == Status::Accepted).all(|rel| {
        rings.iter().all(|fr| rel.stamps.iter().any(|st| st.ring == fr.ring.description() && st.ok && st.base_pairs + st.poly_pairs >= 200))
    });
    let accepted = table.relations.iter().filter(|r| r.status == Status::Accepted).count();
    let failing: usize = rings.iter().map(|fr| verify_table(&mut table, fr, 200, 97).len()).sum();
    let ok = s.eps_eps_all_resolved() && s.mixed_ratio() >= 0.8 && stamped && failing == 0;
    verdict(
        ok,
        format!(
            "eps-eps {}/{} (+{} excluded), mixed {:.1}%, {accepted} accepted, stamps >= 200 pairs: {stamped}, re-verification failures {failing}",
            s.eps_eps_resolved,
            s.eps_eps_total,
            s.eps_eps_excluded,
            100.0 * s.mixed_ratio()
        ),
    )
}

fn symplectic_counts() -> Verdict {
    let sp = form_ring("GF 2, trivial, lambda=-1", "max");
    let orth = form_ring("GF 2, trivial, lambda=1", "min");
    let gq = enum_gq_bruteforce(&sp, 2).unwrap();
    let eq = eq_closure(&sp, 2, DEFAULT_CAP).unwrap();
    let small = enum_gq_bruteforce(&orth, 2).unwrap();
    let subset = small.iter().all(|m| gq.contains(&m));
    let ok = gq.order() == 720 && eq.order() == 720 && small.order() == 72 && subset;
    verdict(ok, format!("|GQ| = {}, |EQ| = {}, |GQ(Lambda=0)| = {}, subset: {subset}", gq.order(), eq.order(), small.order()))
}

fn k1_triviality() -> Verdict {
    let opts = K1Options { strategy: Strategy::BruteForce, ..Default::default() };
    let mut parts = Vec::new();
    let mut ok = true;
    for spec in ["GF 2, trivial, lambda=-1", "GF 3, trivial, lambda=-1"] {
        let rep = k1_compute(&form_ring(spec, "max"), 2, &opts).unwrap();
        ok &= rep.coset_count == 1 && rep.normal && !rep.lower_bound_only && rep.gq_order == Some(rep.eq_order);
        parts.push(format!("{}: {:?}/{} -> {}", spec.split(',').next().unwrap(), rep.gq_order, rep.eq_order, rep.coset_count));
    }
    verdict(ok, parts.join("; "))
}

fn orbit_transitivity() -> Verdict {
    let fr = form_ring("GF 2, trivial, lambda=-1", "max");
    let rep = unimodular_orbit_test(&fr, 3, &Ideal::unit(&fr.ring), DEFAULT_CAP).unwrap();
    let ok = rep.transitive && rep.orbit_size == 63 && rep.um_size == 63;
    verdict(ok, format!("orbit {} of Um {}", rep.orbit_size, rep.um_size))
}

fn glue_round_trip() -> Verdict {
    let fr = form_ring("Zmod 6, trivial, lambda=-1", "max");
    let r = &fr.ring;
    let pr = PolyRing::new(r);
    let table = derive_relation_table(3, &default_sample_rings(), 20, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut failures = Vec::new();
    for k in 0..50 {
        let w = random_instance(&fr, 2, 6, &mut rng);
        let alpha = word_eval(&pr, &w);
        let cover: Vec<(Elem, Word<Poly>)> = [Elem(2), Elem(3)].iter().map(|&s| (s, loc_word(&localize_at(r, s).unwrap(), &w))).collect();
        match local_global_glue(&fr, &table, &alpha, &cover, DilateOptions::default()) {
            Ok(g) if word_eval(&pr, &g.word) == alpha => {}
            Ok(_) => failures.push(format!("instance {k}: wrong value")),
            Err(e) => failures.push(format!("instance {k}: {e}")),
        }
    }
    verdict(failures.is_empty(), format!("50 instances, {} failures {:?}", failures.len(), failures.first()))
}

fn dilation_contract() -> Verdict {
    let fr = form_ring("Zmod 12, trivial, lambda=-1", "max");
    let r = &fr.ring;
    let pr = PolyRing::new(r);
    let loc = localize_at(r, Elem(2)).unwrap();
    let table = derive_relation_table(3, &default_sample_rings(), 20, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut failures = Vec::new();
    for k in 0..25 {
        let w = random_instance(&fr, 2, 6, &mut rng);
        let alpha = word_eval(&pr, &w);
        let dil = match dilate(&fr, &table, &alpha, &loc, &loc_word(&loc, &w), DilateOptions::default()) {
            Ok(d) => d,
            Err(e) => {
                failures.push(format!("instance {k}: {e}"));
                continue;
            }
        };
        let in_ideal = r.elements().any(|x| r.mul_e(r.pow(Elem(2), dil.l), x) == dil.b);
        let beta = word_eval(&pr, &dil.beta);
        let at_zero = pr.eval_mat(&beta, Elem(0), Elem(0), Elem(0)) == formring::algebra::identity(&**r, 4);
        let scaled = pr.subst_mat(&alpha, &Subst { x: pr.scale(dil.b, &pr.x()), t: pr.t(), u: pr.u() });
        let local = loc_mat(&loc, &beta) == loc_mat(&loc, &scaled);
        if !(in_ideal && at_zero && local) {
            failures.push(format!("instance {k}: b in ideal {in_ideal}, beta(0)=I {at_zero}, localized {local}"));
        }
    }
    verdict(failures.is_empty(), format!("25 instances, {} failures {:?}", failures.len(), failures.first()))
}

fn injectivity_probe() -> Verdict {
    let mut parts = Vec::new();
    let mut ok = true;
    for (spec, s, expect) in
        [("Zmod 6, trivial, lambda=-1", 2u16, 1u32), ("Zmod 6, trivial, lambda=-1", 3, 1), ("Zmod 12, trivial, lambda=-1", 2, 2)]
    {
        let fr = form_ring(spec, "max");
        let a = check_localization_injectivity(&fr, Elem(s), 1, 0, 0).unwrap();
        let b = check_localization_injectivity(&fr, Elem(s), 1, 0, 0).unwrap();
        let same = serde_json::to_string(&a).unwrap() == serde_json::to_string(&b).unwrap();
        let exhaustive = a.verdicts.iter().all(|v| v.exhaustive);
        ok &= same && exhaustive && a.least_k == Some(expect);
        let k = a.least_k.map_or("NONE".to_string(), |k| k.to_string());
        parts.push(format!("{} s={s}: k={k}", spec.split(',').next().unwrap()));
    }
    verdict(ok, parts.join("; "))
}

fn stab_map_well_defined() -> Verdict {
    let configs: Vec<(&str, &[usize])> = vec![("GF 2", &[1, 2]), ("GF 3", &[1]), ("Zmod 4", &[1])];
    let mut ok = true;
    let mut exhaustive = 0;
    let mut lines = Vec::new();
    for (ring, ns) in configs {
        let base = RingCtx::parse(&format!("{ring}, trivial, lambda=1")).unwrap();
        for l in base.elements() {
            let Ok(r) = base.with_lambda(l) else { continue };
            let r = Arc::new(r);
            for fp in enumerate_form_params(&r, 10_000).unwrap() {
                let fr = FormRing::new(fp, GenMode::Strict);
                for &n in ns {
                    for slot in [Slot::Outer, Slot::Mid, Slot::Inner] {
                        let gens_ok = formring::k1::eq_generators(&fr, n).iter().all(|g| {
                            let up = stab_embed(&*fr.ring, g, slot);
                            formring::k1::eq_generators(&fr, n + 1).contains(&up)
                        });
                        ok &= gens_ok;
                    }
                    let rep = stab_map_test(&fr, n, Slot::Outer, &K1Options::default()).unwrap();
                    match rep.well_defined {
                        Some(w) => {
                            exhaustive += 1;
                            ok &= w && rep.eq_into_eq;
                        }
                        None => ok = false,
                    }
                    lines.push(format!("{} {} n={n}", r.description(), fr.lambda.describe()));
                }
            }
        }
    }
    verdict(ok, format!("{} configurations, {exhaustive} checked exhaustively", lines.len()))
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 11] = [
        ("generator validity", generator_validity),
        ("splitting lemma", splitting_lemma),
        ("prefix identity", prefix_identity),
        ("relation table", relation_table),
        ("symplectic counts", symplectic_counts),
        ("K1 triviality", k1_triviality),
        ("orbit transitivity", orbit_transitivity),
        ("glue round-trip", glue_round_trip),
        ("dilation contract", dilation_contract),
        ("injectivity probe", injectivity_probe),
        ("stabilization map", stab_map_well_defined),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = f();
        let secs = start.elapsed().as_secs_f64();
        println!("criterion {:>2} {:<20} {} ({secs:.1}s) {}", k + 1, name, if v.ok { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.ok);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
