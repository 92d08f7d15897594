//! Job configuration: line-oriented `key = value` files with `[section]`
//! headers. Keys before any header belong to the root section.
//!
//! ```text
//! task = k1
//! seed = 0
//!
//! [ring]
//! spec = GF 2, trivial, lambda=-1
//! Lambda = max
//!
//! [params]
//! n = 2
//! ```

use std::collections::BTreeMap;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::form_param::parse_form_param;
use crate::k1::DEFAULT_CAP;
use crate::quad::{FormRing, GenMode};
use crate::ring::RingCtx;

pub const TASKS: [&str; 10] =
    ["verify-relations", "derive-table", "k1", "stab-map", "orbit", "stabilizer", "glue", "dilate", "inject-check", "whitehead"];

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawConfig {
    pub sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<RawConfig> {
        let mut cfg = RawConfig::default();
        let mut section = String::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| Error::Config(format!("line {}: unterminated section header", no + 1)))?;
                section = name.trim().to_string();
                cfg.sections.entry(section.clone()).or_default();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", no + 1)))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", no + 1)));
            }
            cfg.sections.entry(section.clone()).or_default().insert(k.to_string(), v.trim().to_string());
        }
        Ok(cfg)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section).and_then(|s| s.get(key)).map(String::as_str)
    }

    pub fn set(&mut self, section: &str, key: &str, value: &str) {
        self.sections.entry(section.to_string()).or_default().insert(key.to_string(), value.to_string());
    }

    /// `section.key=value`, or `key=value` for the root section.
    pub fn apply_override(&mut self, text: &str) -> Result<()> {
        let (k, v) = text.split_once('=').ok_or_else(|| Error::Config(format!("override `{text}`: expected key=value")))?;
        let (section, key) = k.trim().rsplit_once('.').unwrap_or(("", k.trim()));
        self.set(section, key, v.trim());
        Ok(())
    }
}

/// A validated job. `params` holds the task section verbatim; typed access
/// goes through [`Params`], which records every value it hands out.
#[derive(Clone, Debug)]
pub struct JobConfig {
    pub task: String,
    pub ring_spec: String,
    pub lambda_spec: String,
    pub mode: GenMode,
    pub seed: u64,
    pub cap: usize,
    pub threads: usize,
    pub out: Option<String>,
    pub params: BTreeMap<String, String>,
    pub form_ring: Arc<FormRing>,
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().replace('_', "").parse().map_err(|_| Error::Config(format!("`{key}` = `{v}` is not a valid number")))
}

impl JobConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<JobConfig> {
        let task = raw.get("", "task").ok_or_else(|| Error::Config("no task given".into()))?.to_string();
        if !TASKS.contains(&task.as_str()) {
            return Err(Error::Config(format!("unknown task `{task}`; expected one of {}", TASKS.join(", "))));
        }
        let ring_spec = raw.get("ring", "spec").ok_or_else(|| Error::Config("missing [ring] spec".into()))?.to_string();
        let lambda_spec = raw.get("ring", "Lambda").unwrap_or("max").to_string();
        let mode = match raw.get("ring", "mode").unwrap_or("strict") {
            "strict" => GenMode::Strict,
            "hermitian-only" => GenMode::HermitianOnly,
            m => return Err(Error::Config(format!("unknown generator mode `{m}`"))),
        };
        let ring = RingCtx::parse(&ring_spec)?;
        let form_ring = FormRing::new(parse_form_param(&ring, &lambda_spec)?, mode);
        Ok(JobConfig {
            task,
            ring_spec,
            lambda_spec,
            mode,
            seed: raw.get("", "seed").map(|v| parse_num("seed", v)).transpose()?.unwrap_or(0),
            cap: raw.get("", "cap").map(|v| parse_num("cap", v)).transpose()?.unwrap_or(DEFAULT_CAP),
            threads: raw.get("", "threads").map(|v| parse_num("threads", v)).transpose()?.unwrap_or(0),
            out: raw.get("", "out").map(str::to_string),
            params: raw.sections.get("params").cloned().unwrap_or_default(),
            form_ring,
        })
    }

    pub fn params(&self) -> Params<'_> {
        Params { raw: &self.params, used: Default::default() }
    }
}

/// Typed view of the `[params]` section that remembers resolved values,
/// defaults included, for embedding in the report.
pub struct Params<'a> {
    raw: &'a BTreeMap<String, String>,
    used: std::sync::Mutex<BTreeMap<String, String>>,
}

impl Params<'_> {
    fn record(&self, key: &str, v: String) {
        self.used.lock().expect("params lock").insert(key.to_string(), v);
    }

    pub fn num<T: FromStr + ToString>(&self, key: &str, default: T) -> Result<T> {
        let v = match self.raw.get(key) {
            Some(v) => parse_num(key, v)?,
            None => default,
        };
        self.record(key, v.to_string());
        Ok(v)
    }

    pub fn string(&self, key: &str, default: &str) -> String {
        let v = self.raw.get(key).cloned().unwrap_or_else(|| default.to_string());
        self.record(key, v.clone());
        v
    }

    pub fn optional(&self, key: &str) -> Option<String> {
        let v = self.raw.get(key).cloned();
        if let Some(v) = &v {
            self.record(key, v.clone());
        }
        v
    }

    pub fn json(&self, key: &str, default: &str) -> Result<serde_json::Value> {
        let text = self.string(key, default);
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("`{key}` = `{text}`: {e}")))
    }

    pub fn unknown(&self) -> Vec<String> {
        let used = self.used.lock().expect("params lock");
        self.raw.keys().filter(|k| !used.contains_key(*k)).cloned().collect()
    }

    pub fn resolved(&self) -> BTreeMap<String, String> {
        self.used.lock().expect("params lock").clone()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ResolvedConfig {
    pub task: String,
    pub ring: String,
    #[serde(rename = "Lambda")]
    pub lambda_spec: String,
    pub lambda_elements: Vec<serde_json::Value>,
    pub mode: GenMode,
    pub seed: u64,
    pub cap: usize,
    pub threads: usize,
    pub params: BTreeMap<String, String>,
}

impl ResolvedConfig {
    pub fn new(job: &JobConfig, params: BTreeMap<String, String>) -> ResolvedConfig {
        let r = &job.form_ring.ring;
        ResolvedConfig {
            task: job.task.clone(),
            ring: job.ring_spec.clone(),
            lambda_spec: job.lambda_spec.clone(),
            lambda_elements: job.form_ring.lambda.elements().iter().map(|&x| r.label(x).clone()).collect(),
            mode: job.mode,
            seed: job.seed,
            cap: job.cap,
            threads: job.threads,
            params,
        }
    }
}
