//! Batch front end: runs one configured task and produces a JSON report.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{JobConfig, Params, RawConfig, ResolvedConfig};
use crate::error::{Error, Result};
use crate::glue::{check_localization_injectivity, dilate, loc_word, local_global_glue, random_instance, DilateOptions};
use crate::k1::{k1_compute, stab_map_test, stabilizer_decomp_test, unimodular_orbit_test, whitehead_test, K1Options, Strategy};
use crate::poly::{Poly, PolyRing};
use crate::quad::Slot;
use crate::relations::{default_sample_rings, derive_relation_table, verify_table, RelationTable};
use crate::ring::{localize_at, parse_element, Elem, Ideal};
use crate::word::{poly_word_from_json, poly_word_to_json, word_eval, Word};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 2;
pub const EXIT_CAPS: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "formring", version, about = "Form rings, quadratic groups and local-global experiments")]
pub struct Cli {
    /// Task to run; overrides `task` from the config file.
    pub task: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub cap: Option<usize>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Override a config entry, `section.key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

/// What a task produced, before it is wrapped into a report.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Verified,
    Counterexample,
    CapsHit,
}

impl Verdict {
    fn code(self) -> i32 {
        match self {
            Verdict::Verified => EXIT_OK,
            Verdict::Counterexample => EXIT_FAILED,
            Verdict::CapsHit => EXIT_CAPS,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Verdict::Verified => "verified",
            Verdict::Counterexample => "counterexample",
            Verdict::CapsHit => "caps-hit",
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::CapExceeded { .. } | Error::TooLarge(_) | Error::DegreeOverflow(_) => EXIT_CAPS,
        Error::VerificationFailed(_) | Error::UnresolvedRelation(_) => EXIT_FAILED,
        _ => EXIT_CONFIG,
    }
}

pub struct Outcome {
    pub code: i32,
    pub report: Value,
    /// Extra files requested by the task, written next to the report.
    pub files: Vec<(PathBuf, Value)>,
}

fn load_json(path: &str) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read `{path}`: {e}")))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("`{path}`: {e}")))
}

fn elems(job: &JobConfig, v: &Value) -> Result<Vec<Elem>> {
    let r = &job.form_ring.ring;
    let items = v.as_array().ok_or_else(|| Error::Config(format!("`{v}` is not a list")))?;
    items.iter().map(|x| parse_element(r, x)).collect()
}

fn table_for(p: &Params<'_>, seed: u64) -> Result<RelationTable> {
    match p.optional("table") {
        Some(path) => RelationTable::from_json(&load_json(&path)?),
        None => Ok(derive_relation_table(p.num("table_n", 3usize)?, &default_sample_rings(), p.num("table_poly_pairs", 20usize)?, seed)),
    }
}

/// Input words: the `word` file, or seeded random instances.
fn instances(job: &JobConfig, p: &Params<'_>) -> Result<Vec<Word<Poly>>> {
    let n = p.num("n", 2usize)?;
    if let Some(path) = p.optional("word") {
        let v = load_json(&path)?;
        let v = v.get("word").cloned().unwrap_or(v);
        return Ok(vec![poly_word_from_json(&job.form_ring.ring, n, &v)?]);
    }
    let count = p.num("instances", 1usize)?;
    let len = p.num("length", 6usize)?;
    let mut rng = ChaCha8Rng::seed_from_u64(job.seed);
    Ok((0..count).map(|_| random_instance(&job.form_ring, n, len, &mut rng)).collect())
}

fn k1_options(job: &JobConfig, p: &Params<'_>) -> Result<K1Options> {
    Ok(K1Options {
        strategy: Strategy::parse(&p.string("strategy", "auto"))?,
        cap: job.cap,
        samples: p.num("samples", 2000usize)?,
        seed: job.seed,
    })
}

fn caps_or(caps: &[String], ok: bool) -> Verdict {
    if !ok {
        Verdict::Counterexample
    } else if caps.is_empty() {
        Verdict::Verified
    } else {
        Verdict::CapsHit
    }
}

type TaskResult = Result<(Verdict, Value, Vec<(PathBuf, Value)>)>;

fn run_task(job: &JobConfig, p: &Params<'_>) -> TaskResult {
    let fr = &job.form_ring;
    let r = &fr.ring;
    match job.task.as_str() {
        "derive-table" => {
            let n = p.num("n", 3usize)?;
            let rings = match p.string("rings", "default").as_str() {
                "default" => default_sample_rings(),
                "config" => vec![fr.clone()],
                other => return Err(Error::Config(format!("rings = `{other}`: expected default or config"))),
            };
            let table = derive_relation_table(n, &rings, p.num("poly_pairs", 20usize)?, job.seed);
            let summary = table.summary();
            let ok = summary.eps_eps_all_resolved();
            let mut files = Vec::new();
            if let Some(path) = p.optional("table_out") {
                files.push((PathBuf::from(path), serde_json::to_value(&table).expect("table serializes")));
            }
            let v = json!({"summary": summary, "mixed_ratio": summary.mixed_ratio(), "table": table});
            Ok((if ok { Verdict::Verified } else { Verdict::Counterexample }, v, files))
        }
        "verify-relations" => {
            let mut table = table_for(p, job.seed)?;
            let failing = verify_table(&mut table, fr, p.num("poly_pairs", 200usize)?, job.seed);
            let v = json!({
                "n": table.n,
                "summary": table.summary(),
                "failing": failing.iter().map(|f| f.to_string()).collect::<Vec<_>>(),
            });
            Ok((if failing.is_empty() { Verdict::Verified } else { Verdict::Counterexample }, v, Vec::new()))
        }
        "k1" => {
            let rep = k1_compute(fr, p.num("n", 2usize)?, &k1_options(job, p)?)?;
            let verdict = caps_or(&rep.caps_hit, rep.normal);
            Ok((verdict, serde_json::to_value(&rep).expect("report serializes"), Vec::new()))
        }
        "stab-map" => {
            let slot = Slot::parse(&p.string("slot", "outer"))?;
            let rep = stab_map_test(fr, p.num("n", 2usize)?, slot, &k1_options(job, p)?)?;
            let ok = rep.generators_to_generators && rep.eq_into_eq && rep.well_defined != Some(false);
            let verdict = if rep.upper.is_none() && ok { Verdict::CapsHit } else { caps_or(&rep.caps_hit, ok) };
            Ok((verdict, serde_json::to_value(&rep).expect("report serializes"), Vec::new()))
        }
        "orbit" => {
            let n = p.num("n", 3usize)?;
            let gens = elems(job, &p.json("ideal", "[1]")?)?;
            let rep = unimodular_orbit_test(fr, n, &Ideal::generated_by(r, &gens), job.cap)?;
            let ok = rep.transitive || !rep.in_hypothesis || !rep.caps_hit.is_empty();
            Ok((caps_or(&rep.caps_hit, ok), serde_json::to_value(&rep).expect("report serializes"), Vec::new()))
        }
        "stabilizer" => {
            let rep = stabilizer_decomp_test(fr, p.num("n", 2usize)?, &k1_options(job, p)?)?;
            Ok((caps_or(&rep.caps_hit, rep.all_pass), serde_json::to_value(&rep).expect("report serializes"), Vec::new()))
        }
        "whitehead" => {
            let rep = whitehead_test(fr, p.num("n", 2usize)?, &k1_options(job, p)?)?;
            Ok((caps_or(&rep.caps_hit, true), serde_json::to_value(&rep).expect("report serializes"), Vec::new()))
        }
        "inject-check" => {
            let n = p.num("n", 1usize)?;
            let samples = p.num("samples", 200_000usize)?;
            let mut reports = Vec::new();
            for s in elems(job, &p.json("s", "[]")?)? {
                reports.push(check_localization_injectivity(fr, s, n, samples, job.seed)?);
            }
            if reports.is_empty() {
                return Err(Error::Config("inject-check needs `s = [...]`".into()));
            }
            let ok = reports.iter().all(|x| x.least_k.is_some());
            Ok((caps_or(&[], ok), json!({ "probes": reports }), Vec::new()))
        }
        "dilate" => {
            let s = parse_element(r, &p.json("s", "null")?)?;
            let loc = localize_at(r, s)?;
            let table = table_for(p, job.seed)?;
            let opts = DilateOptions { cap: p.num("degree_cap", DilateOptions::default().cap)?, ..Default::default() };
            let pr = PolyRing::with_cap(r, opts.cap);
            let mut out = Vec::new();
            let mut words = Vec::new();
            for w in instances(job, p)? {
                let alpha = word_eval(&pr, &w);
                let d = dilate(fr, &table, &alpha, &loc, &loc_word(&loc, &w), opts)?;
                out.push(json!({"input": poly_word_to_json(r, &w), "dilation": d.to_json(r)}));
                words.push(poly_word_to_json(r, &d.beta));
            }
            let files = p.optional("word_out").map(|f| vec![(PathBuf::from(f), Value::Array(words))]).unwrap_or_default();
            Ok((Verdict::Verified, json!({ "instances": out }), files))
        }
        "glue" => {
            let cover = elems(job, &p.json("cover", "[]")?)?;
            let table = table_for(p, job.seed)?;
            let opts = DilateOptions { cap: p.num("degree_cap", DilateOptions::default().cap)?, ..Default::default() };
            let pr = PolyRing::with_cap(r, opts.cap);
            let mut out = Vec::new();
            let mut words = Vec::new();
            let mut all_ok = true;
            for w in instances(job, p)? {
                let alpha = word_eval(&pr, &w);
                let local = cover.iter().map(|&s| Ok((s, loc_word(&localize_at(r, s)?, &w)))).collect::<Result<Vec<_>>>()?;
                let g = local_global_glue(fr, &table, &alpha, &local, opts)?;
                let round_trip = word_eval(&pr, &g.word) == alpha;
                all_ok &= round_trip;
                out.push(json!({"input": poly_word_to_json(r, &w), "round_trip": round_trip, "glue": g.to_json(r)}));
                words.push(poly_word_to_json(r, &g.word));
            }
            let files = p.optional("word_out").map(|f| vec![(PathBuf::from(f), Value::Array(words))]).unwrap_or_default();
            Ok((caps_or(&[], all_ok), json!({ "instances": out }), files))
        }
        other => Err(Error::Config(format!("unknown task `{other}`"))),
    }
}

/// Run a validated job. The report always embeds the resolved config;
/// `timing` is the only field that varies between identical runs.
pub fn run(job: &JobConfig) -> Outcome {
    let p = job.params();
    let start = Instant::now();
    let go = || run_task(job, &p);
    let result = if job.threads > 0 {
        match rayon::ThreadPoolBuilder::new().num_threads(job.threads).build() {
            Ok(pool) => pool.install(go),
            Err(e) => Err(Error::Config(format!("thread pool: {e}"))),
        }
    } else {
        go()
    };
    let elapsed = start.elapsed().as_secs_f64();
    let unknown = p.unknown();
    let config = ResolvedConfig::new(job, p.resolved());
    let (code, status, result, error, files) = match result {
        Ok((v, res, files)) => (v.code(), v.name(), res, Value::Null, files),
        Err(e) => (exit_code(&e), "error", Value::Null, Value::String(e.to_string()), Vec::new()),
    };
    let mut report = json!({
        "task": job.task,
        "status": status,
        "exit_code": code,
        "config": config,
        "result": result,
        "timing": {"seconds": elapsed},
    });
    if !error.is_null() {
        report["error"] = error;
    }
    if !unknown.is_empty() {
        report["unused_params"] = json!(unknown);
    }
    Outcome { code, report, files }
}

fn config_error(msg: String) -> Outcome {
    Outcome { code: EXIT_CONFIG, report: json!({"status": "error", "exit_code": EXIT_CONFIG, "error": msg}), files: Vec::new() }
}

/// Resolve flags and config file into a job and run it.
pub fn execute(cli: &Cli) -> (Outcome, Option<PathBuf>) {
    let mut raw = match &cli.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => match RawConfig::parse(&text) {
                Ok(raw) => raw,
                Err(e) => return (config_error(e.to_string()), cli.out.clone()),
            },
            Err(e) => return (config_error(format!("cannot read {}: {e}", path.display())), cli.out.clone()),
        },
        None => RawConfig::default(),
    };
    if let Some(t) = &cli.task {
        raw.set("", "task", t);
    }
    if let Some(s) = cli.seed {
        raw.set("", "seed", &s.to_string());
    }
    if let Some(c) = cli.cap {
        raw.set("", "cap", &c.to_string());
    }
    if let Some(t) = cli.threads {
        raw.set("", "threads", &t.to_string());
    }
    for o in &cli.set {
        if let Err(e) = raw.apply_override(o) {
            return (config_error(e.to_string()), cli.out.clone());
        }
    }
    let job = match JobConfig::from_raw(&raw) {
        Ok(j) => j,
        Err(e) => return (config_error(e.to_string()), cli.out.clone()),
    };
    let out = cli.out.clone().or_else(|| job.out.clone().map(PathBuf::from));
    (run(&job), out)
}

pub fn write_json(path: &Path, v: &Value) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(v).expect("json serializes");
    text.push('\n');
    std::fs::write(path, text)
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let (outcome, out) = execute(&cli);
    for (path, v) in &outcome.files {
        if let Err(e) = write_json(path, v) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return EXIT_CONFIG;
        }
    }
    match out {
        Some(path) => {
            if let Err(e) = write_json(&path, &outcome.report) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return EXIT_CONFIG;
            }
            eprintln!("{}: {}", outcome.report["status"].as_str().unwrap_or("error"), path.display());
        }
        None => println!("{}", serde_json::to_string_pretty(&outcome.report).expect("json serializes")),
    }
    if let Some(e) = outcome.report.get("error").and_then(Value::as_str) {
        eprintln!("error: {e}");
    }
    outcome.code
}
