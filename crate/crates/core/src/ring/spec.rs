//! Ring spec grammar:
//!
//! ```text
//! Zmod <n> | GF <p> | GaussMod <n> | PolyQuot <base> <monic poly in x>
//!     , trivial|conj, lambda=<int or a+bi>
//! ```

use serde_json::{json, Value};

use super::{Elem, Involution, RingCtx, RingKind, RingTables, MAX_RING_SIZE};
use crate::error::{Error, Result};

pub(super) fn make_ring(spec: &str) -> Result<RingCtx> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(Error::RingSpec(spec.to_string()));
    }
    let involution = match parts[1] {
        "trivial" => Involution::Trivial,
        "conj" => Involution::Conj,
        _ => return Err(Error::RingSpec(spec.to_string())),
    };
    let lambda_text = parts[2]
        .strip_prefix("lambda")
        .map(str::trim_start)
        .and_then(|s| s.strip_prefix('='))
        .map(str::trim)
        .ok_or_else(|| Error::RingSpec(spec.to_string()))?;

    let kind = parse_kind(parts[0])?;
    let mut tables = build_tables(&kind, involution)?;
    let lambda = parse_lambda(&kind, &tables, lambda_text)?;
    tables.lambda = lambda;
    tables.description = format!("{}, {}, lambda={}", kind_text(&kind), parts[1], lambda_text);
    RingCtx::from_tables(tables)
}

fn parse_kind(text: &str) -> Result<RingKind> {
    let toks: Vec<&str> = text.split_whitespace().collect();
    let bad = || Error::RingSpec(text.to_string());
    let modulus = |t: Option<&&str>| -> Result<u32> {
        let n: u32 = t.ok_or_else(bad)?.parse().map_err(|_| bad())?;
        if n < 2 {
            return Err(bad());
        }
        Ok(n)
    };
    match toks.first().copied() {
        Some("Zmod") if toks.len() == 2 => Ok(RingKind::Zmod(modulus(toks.get(1))?)),
        Some("GF") if toks.len() == 2 => {
            let p = modulus(toks.get(1))?;
            if !(2..p).take_while(|d| d * d <= p).all(|d| p % d != 0) {
                return Err(Error::UnsupportedRing(format!("GF {p}: only prime fields")));
            }
            Ok(RingKind::Gf(p))
        }
        Some("GaussMod") if toks.len() == 2 => Ok(RingKind::GaussMod(modulus(toks.get(1))?)),
        Some("PolyQuot") if toks.len() >= 4 => {
            let base = parse_kind(&toks[1..3].join(" "))?;
            if matches!(base, RingKind::PolyQuot { .. }) {
                return Err(Error::UnsupportedRing("nested PolyQuot".into()));
            }
            let modulus = parse_int_poly(&toks[3..].join(""))?;
            Ok(RingKind::PolyQuot { base: Box::new(base), modulus })
        }
        _ => Err(bad()),
    }
}

fn kind_text(kind: &RingKind) -> String {
    match kind {
        RingKind::Zmod(n) => format!("Zmod {n}"),
        RingKind::Gf(p) => format!("GF {p}"),
        RingKind::GaussMod(n) => format!("GaussMod {n}"),
        RingKind::PolyQuot { base, modulus } => {
            format!("PolyQuot {} {}", kind_text(base), int_poly_text(modulus))
        }
        RingKind::Corner { source, idempotent } => format!("Corner({source}; e={idempotent})"),
    }
}

fn int_poly_text(coeffs: &[i64]) -> String {
    let mut out = String::new();
    for (k, &c) in coeffs.iter().enumerate().rev() {
        if c == 0 {
            continue;
        }
        let sign = if c < 0 {
            "-"
        } else if out.is_empty() {
            ""
        } else {
            "+"
        };
        let mag = c.abs();
        let mono = match k {
            0 => format!("{mag}"),
            1 if mag == 1 => "x".into(),
            1 => format!("{mag}x"),
            _ if mag == 1 => format!("x^{k}"),
            _ => format!("{mag}x^{k}"),
        };
        out.push_str(sign);
        out.push_str(&mono);
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

/// Parses `x^2+x+1`, `x^3-2x+1`, `2*x^2 + 1` into coefficients, lowest first.
fn parse_int_poly(text: &str) -> Result<Vec<i64>> {
    let bad = || Error::RingSpec(format!("bad polynomial `{text}`"));
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(bad());
    }
    let mut terms = Vec::new();
    let mut cur = String::new();
    for (i, ch) in s.chars().enumerate() {
        if (ch == '+' || ch == '-') && i > 0 {
            terms.push(std::mem::take(&mut cur));
        }
        cur.push(ch);
    }
    terms.push(cur);
    let mut coeffs: Vec<i64> = Vec::new();
    for t in terms {
        let (sign, body) = match t.strip_prefix('-') {
            Some(b) => (-1, b),
            None => (1, t.strip_prefix('+').unwrap_or(&t)),
        };
        let (coef, deg) = match body.find('x') {
            None => (body.parse::<i64>().map_err(|_| bad())?, 0usize),
            Some(pos) => {
                let c = body[..pos].trim_end_matches('*');
                let c = if c.is_empty() { 1 } else { c.parse::<i64>().map_err(|_| bad())? };
                let rest = &body[pos + 1..];
                let d = if rest.is_empty() { 1 } else { rest.strip_prefix('^').ok_or_else(bad)?.parse::<usize>().map_err(|_| bad())? };
                (c, d)
            }
        };
        if coeffs.len() <= deg {
            coeffs.resize(deg + 1, 0);
        }
        coeffs[deg] += sign * coef;
    }
    while coeffs.len() > 1 && *coeffs.last().unwrap() == 0 {
        coeffs.pop();
    }
    if coeffs.len() < 2 || *coeffs.last().unwrap() != 1 {
        return Err(Error::RingSpec(format!("modulus `{text}` must be monic of degree >= 1")));
    }
    Ok(coeffs)
}

fn tabulate(
    size: usize,
    add: impl Fn(usize, usize) -> usize,
    mul: impl Fn(usize, usize) -> usize,
    neg: impl Fn(usize) -> usize,
    conj: impl Fn(usize) -> usize,
) -> (Vec<u16>, Vec<u16>, Vec<u16>, Vec<u16>) {
    let mut at = Vec::with_capacity(size * size);
    let mut mt = Vec::with_capacity(size * size);
    for a in 0..size {
        for b in 0..size {
            at.push(add(a, b) as u16);
            mt.push(mul(a, b) as u16);
        }
    }
    let nt = (0..size).map(|a| neg(a) as u16).collect();
    let ct = (0..size).map(|a| conj(a) as u16).collect();
    (at, mt, nt, ct)
}

fn build_tables(kind: &RingKind, involution: Involution) -> Result<RingTables> {
    let too_big = |s: usize| Error::UnsupportedRing(format!("ring of size {s} exceeds {MAX_RING_SIZE}"));
    let t = match kind {
        RingKind::Zmod(n) | RingKind::Gf(n) => {
            if involution == Involution::Conj {
                return Err(Error::UnsupportedRing("conj involution needs GaussMod or a PolyQuot over it".into()));
            }
            let n = *n as usize;
            if n > MAX_RING_SIZE {
                return Err(too_big(n));
            }
            let (add, mul, neg, conj) = tabulate(n, |a, b| (a + b) % n, |a, b| (a * b) % n, |a| (n - a) % n, |a| a);
            RingTables {
                kind: kind.clone(),
                involution,
                labels: (0..n).map(|k| json!(k)).collect(),
                add,
                mul,
                neg,
                conj,
                one: Elem(1 % n as u16),
                lambda: Elem(0),
                description: String::new(),
            }
        }
        RingKind::GaussMod(n) => {
            let n = *n as usize;
            let size = n * n;
            if size > MAX_RING_SIZE {
                return Err(too_big(size));
            }
            let split = |x: usize| (x / n, x % n);
            let join = |a: usize, b: usize| a * n + b;
            let (add, mul, neg, conj) = tabulate(
                size,
                |x, y| {
                    let ((a, b), (c, d)) = (split(x), split(y));
                    join((a + c) % n, (b + d) % n)
                },
                |x, y| {
                    let ((a, b), (c, d)) = (split(x), split(y));
                    join((a * c + (n - (b * d) % n)) % n, (a * d + b * c) % n)
                },
                |x| {
                    let (a, b) = split(x);
                    join((n - a) % n, (n - b) % n)
                },
                |x| {
                    let (a, b) = split(x);
                    match involution {
                        Involution::Conj => join(a, (n - b) % n),
                        Involution::Trivial => x,
                    }
                },
            );
            RingTables {
                kind: kind.clone(),
                involution,
                labels: (0..size).map(|x| json!([x / n, x % n])).collect(),
                add,
                mul,
                neg,
                conj,
                one: Elem(join(1, 0) as u16),
                lambda: Elem(0),
                description: String::new(),
            }
        }
        RingKind::PolyQuot { base, modulus } => {
            let mut bt = build_tables(base, involution)?;
            bt.lambda = bt.one;
            let b = RingCtx::from_tables(bt)?;
            let deg = modulus.len() - 1;
            let bs = b.size();
            let size = bs.checked_pow(deg as u32).filter(|&s| s <= MAX_RING_SIZE).ok_or_else(|| too_big(usize::MAX))?;
            let mods: Vec<Elem> = modulus.iter().map(|&c| b.from_int(c)).collect();
            let digits = |mut x: usize| -> Vec<Elem> {
                (0..deg)
                    .map(|_| {
                        let d = x % bs;
                        x /= bs;
                        Elem(d as u16)
                    })
                    .collect()
            };
            let undigits = |v: &[Elem]| v.iter().rev().fold(0usize, |acc, d| acc * bs + d.idx());
            let (add, mul, neg, conj) = tabulate(
                size,
                |x, y| {
                    let (p, q) = (digits(x), digits(y));
                    let s: Vec<Elem> = p.iter().zip(&q).map(|(a, c)| b.add_e(*a, *c)).collect();
                    undigits(&s)
                },
                |x, y| {
                    let (p, q) = (digits(x), digits(y));
                    let mut prod = vec![Elem(0); 2 * deg];
                    for (i, a) in p.iter().enumerate() {
                        for (j, c) in q.iter().enumerate() {
                            prod[i + j] = b.add_e(prod[i + j], b.mul_e(*a, *c));
                        }
                    }
                    for k in (deg..2 * deg).rev() {
                        let top = prod[k];
                        if top == Elem(0) {
                            continue;
                        }
                        for (t, m) in mods.iter().enumerate().take(deg) {
                            let idx = k - deg + t;
                            prod[idx] = b.sub_e(prod[idx], b.mul_e(top, *m));
                        }
                        prod[k] = Elem(0);
                    }
                    undigits(&prod[..deg])
                },
                |x| {
                    let p: Vec<Elem> = digits(x).into_iter().map(|a| b.neg_e(a)).collect();
                    undigits(&p)
                },
                |x| {
                    let p: Vec<Elem> = digits(x).into_iter().map(|a| b.conj_e(a)).collect();
                    undigits(&p)
                },
            );
            let labels = (0..size).map(|x| Value::Array(digits(x).into_iter().map(|d| b.label(d).clone()).collect())).collect();
            let mut one = vec![Elem(0); deg];
            one[0] = b.one_el();
            RingTables {
                kind: kind.clone(),
                involution,
                labels,
                add,
                mul,
                neg,
                conj,
                one: Elem(undigits(&one) as u16),
                lambda: Elem(0),
                description: String::new(),
            }
        }
        RingKind::Corner { .. } => return Err(Error::UnsupportedRing("corner rings are built by localization".into())),
    };
    Ok(t)
}

/// `5`, `-1`, `i`, `-i`, `1+2i`, `2-i`.
fn parse_gaussian(text: &str) -> Option<(i64, i64)> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if !s.ends_with('i') {
        return s.parse().ok().map(|a| (a, 0));
    }
    let body = &s[..s.len() - 1];
    let split = body.char_indices().skip(1).filter(|(_, c)| *c == '+' || *c == '-').map(|(i, _)| i).last();
    let (re, im) = match split {
        Some(p) => (&body[..p], &body[p..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1,
        "-" => -1,
        t => t.parse().ok()?,
    };
    Some((re.parse().ok()?, im))
}

fn parse_lambda(kind: &RingKind, t: &RingTables, text: &str) -> Result<Elem> {
    let bad = || Error::RingSpec(format!("bad lambda `{text}`"));
    let (re, im) = parse_gaussian(text).ok_or_else(bad)?;
    let value = match kind {
        RingKind::GaussMod(_) => json!([re, im]),
        RingKind::PolyQuot { base, .. } if matches!(**base, RingKind::GaussMod(_)) => json!([re, im]),
        _ if im != 0 => return Err(bad()),
        _ => json!(re),
    };
    parse_in_tables(kind, &t.labels, t.one, &t.add, value).ok_or_else(bad)
}

/// Resolve a JSON element against raw tables (used before the context exists).
fn parse_in_tables(kind: &RingKind, labels: &[Value], one: Elem, add: &[u16], v: Value) -> Option<Elem> {
    let size = labels.len();
    let from_int = |k: i64| {
        let mut acc = 0usize;
        let mut c = 0i64;
        // characteristic
        let mut x = one.idx();
        let mut ch = 1i64;
        while x != 0 {
            x = add[x * size + one.idx()] as usize;
            ch += 1;
        }
        let r = k.rem_euclid(ch);
        while c < r {
            acc = add[acc * size + one.idx()] as usize;
            c += 1;
        }
        Elem(acc as u16)
    };
    match (&v, kind) {
        (Value::Number(n), _) => n.as_i64().map(from_int),
        (Value::Array(a), RingKind::GaussMod(m)) if a.len() == 2 => {
            let m = *m as i64;
            let re = a[0].as_i64()?.rem_euclid(m);
            let im = a[1].as_i64()?.rem_euclid(m);
            Some(Elem((re * m + im) as u16))
        }
        (Value::Array(a), RingKind::PolyQuot { base, modulus })
            if matches!(**base, RingKind::GaussMod(_)) && a.len() == 2 && a[0].is_number() && modulus.len() > 1 =>
        {
            // a+bi embedded as a constant
            let m = match **base {
                RingKind::GaussMod(m) => m as i64,
                _ => unreachable!(),
            };
            let deg = modulus.len() - 1;
            let mut coeffs = vec![json!([0, 0]); deg];
            coeffs[0] = json!([a[0].as_i64()?.rem_euclid(m), a[1].as_i64()?.rem_euclid(m)]);
            labels.iter().position(|l| *l == Value::Array(coeffs.clone())).map(|p| Elem(p as u16))
        }
        _ => labels.iter().position(|l| *l == v).map(|p| Elem(p as u16)),
    }
}

pub fn parse_element(ring: &RingCtx, v: &Value) -> Result<Elem> {
    let bad = || Error::Parse(format!("`{v}` is not an element of {}", ring.description()));
    match (v, ring.kind()) {
        (Value::Number(n), RingKind::Corner { .. }) => ring
            .labels()
            .iter()
            .position(|l| l == v)
            .map(|p| Elem(p as u16))
            .or_else(|| n.as_i64().map(|k| ring.from_int(k)))
            .ok_or_else(bad),
        (Value::Number(n), _) => n.as_i64().map(|k| ring.from_int(k)).ok_or_else(bad),
        (Value::Array(a), RingKind::GaussMod(m)) if a.len() == 2 => {
            let m = *m as i64;
            let re = a[0].as_i64().ok_or_else(bad)?.rem_euclid(m);
            let im = a[1].as_i64().ok_or_else(bad)?.rem_euclid(m);
            Ok(Elem((re * m + im) as u16))
        }
        (Value::Array(a), RingKind::PolyQuot { base, modulus }) => {
            let deg = modulus.len() - 1;
            if a.len() > deg {
                return Err(bad());
            }
            // normalize each coefficient through the exact label set of the ring
            let mut norm = Vec::with_capacity(deg);
            for c in a {
                norm.push(normalize_base_label(base, c).ok_or_else(bad)?);
            }
            let zero = match **base {
                RingKind::GaussMod(_) => json!([0, 0]),
                _ => json!(0),
            };
            norm.resize(deg, zero);
            let target = Value::Array(norm);
            ring.labels().iter().position(|l| *l == target).map(|p| Elem(p as u16)).ok_or_else(bad)
        }
        _ => ring.labels().iter().position(|l| l == v).map(|p| Elem(p as u16)).ok_or_else(bad),
    }
}

fn normalize_base_label(base: &RingKind, v: &Value) -> Option<Value> {
    match base {
        RingKind::Zmod(n) | RingKind::Gf(n) => Some(json!(v.as_i64()?.rem_euclid(*n as i64))),
        RingKind::GaussMod(n) => {
            let n = *n as i64;
            match v {
                Value::Number(k) => Some(json!([k.as_i64()?.rem_euclid(n), 0])),
                Value::Array(a) if a.len() == 2 => Some(json!([a[0].as_i64()?.rem_euclid(n), a[1].as_i64()?.rem_euclid(n)])),
                _ => None,
            }
        }
        _ => None,
    }
}

pub fn label_text(v: &Value) -> String {
    match v {
        Value::Array(a) if a.len() == 2 && a.iter().all(Value::is_number) => format!("{}+{}i", a[0], a[1]),
        other => other.to_string(),
    }
}

pub(super) fn replace_lambda(description: &str, label: &Value) -> String {
    match description.rfind("lambda=") {
        Some(p) => format!("{}lambda={}", &description[..p], label_text(label)),
        None => description.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_literals() {
        assert_eq!(parse_gaussian("i"), Some((0, 1)));
        assert_eq!(parse_gaussian("-i"), Some((0, -1)));
        assert_eq!(parse_gaussian("1+2i"), Some((1, 2)));
        assert_eq!(parse_gaussian("2-i"), Some((2, -1)));
        assert_eq!(parse_gaussian("-1"), Some((-1, 0)));
        assert_eq!(parse_gaussian("x"), None);
    }

    #[test]
    fn int_polys() {
        assert_eq!(parse_int_poly("x^2+x+1").unwrap(), vec![1, 1, 1]);
        assert_eq!(parse_int_poly("x^3 - 2*x + 1").unwrap(), vec![1, -2, 0, 1]);
        assert!(parse_int_poly("2x^2+1").is_err());
        assert_eq!(int_poly_text(&[1, -2, 0, 1]), "x^3-2x+1");
    }

    #[test]
    fn malformed_specs() {
        for s in [
            "Zmod",
            "Zmod 6",
            "Zmod 6, weird, lambda=1",
            "Zmod x, trivial, lambda=1",
            "GF 6, trivial, lambda=1",
            "Zmod 6, conj, lambda=1",
            "Zmod 6, trivial, lambda=i",
        ] {
            assert!(make_ring(s).is_err(), "{s}");
        }
    }
}
