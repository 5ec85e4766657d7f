//! Browser bindings: reduce a bundle, draw who a name is bound to over
//! time, and decide a single concrete query. Each export takes the bundle
//! as text and returns JSON; the `*_json` functions are the same thing
//! callable from native tests.

use std::collections::BTreeSet;

use serde::Serialize;
use wasm_bindgen::prelude::*;

use spki_core::codec::{decode_action, encode_tuple, parse_bundle};
use spki_core::engine::{auth_query, name_query, result_certificates, ClosureConfig, ConcreteDecider, RuleSet};
use spki_core::semantics::{minimal_interpretation, Run, Universe};
use spki_core::sexpr::parse_sexpr;
use spki_core::{Certificate, Key, LocalName};

#[derive(Serialize, Debug)]
pub struct Reduced {
    pub rules: String,
    pub tuples: Vec<String>,
}

/// One row per key; `engine[t]` is the concrete decision, `model[t]`
/// whether the minimal interpretation of the canonical run binds it.
#[derive(Serialize, Debug)]
pub struct TimelineRow {
    pub key: String,
    pub engine: Vec<bool>,
    pub model: Vec<bool>,
}

#[derive(Serialize, Debug)]
pub struct Timeline {
    pub times: Vec<u64>,
    pub rows: Vec<TimelineRow>,
}

#[derive(Serialize, Debug)]
pub struct Decision {
    pub query: String,
    pub granted: bool,
    pub trace: Option<String>,
}

fn split(text: &str) -> Result<(Vec<Certificate>, Vec<Certificate>), String> {
    let all = parse_bundle(text).map_err(|e| e.to_string())?;
    Ok(all.into_iter().partition(|c| !c.is_crl()))
}

fn key(s: &str) -> Result<Key, String> {
    Key::new(s.trim()).map_err(|e| e.to_string())
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data serializes")
}

pub fn reduce_json(text: &str, rules: &str) -> Result<String, String> {
    let rs: RuleSet = rules.parse().map_err(|e: spki_core::engine::EngineError| e.to_string())?;
    let (certs, crls) = split(text)?;
    let tuples = result_certificates(&certs, &crls, rs, &ClosureConfig::default()).map_err(|e| e.to_string())?;
    Ok(to_json(&Reduced { rules: rs.to_string(), tuples: tuples.iter().map(encode_tuple).collect() }))
}

pub fn timeline_json(text: &str, issuer: &str, name: &str) -> Result<String, String> {
    let k = key(issuer)?;
    let n = LocalName::new(name.trim()).map_err(|e| e.to_string())?;
    let (certs, crls) = split(text)?;
    let all: Vec<Certificate> = certs.iter().chain(&crls).cloned().collect();
    let universe = Universe::from_instance(&all, []);
    let run = Run::canonical(&all).map_err(|e| e.to_string())?;
    let pi = minimal_interpretation(&run, &universe);
    let decider = ConcreteDecider::new(&certs, &crls);
    let times: Vec<u64> = (0..=universe.horizon).collect();
    let keys: BTreeSet<&Key> = universe.keys.iter().collect();
    let rows = keys
        .into_iter()
        .map(|k2| TimelineRow {
            key: k2.to_string(),
            engine: times.iter().map(|&t| decider.bound_at(&k, &n, k2, t)).collect(),
            model: times.iter().map(|&t| pi.names_at(&k, &n, t).contains(k2)).collect(),
        })
        .collect();
    Ok(to_json(&Timeline { times, rows }))
}

/// `what` is an action (an authorization query) or, prefixed with `name:`,
/// a local name (a naming query).
pub fn decide_json(text: &str, issuer: &str, subject: &str, what: &str, time: u64) -> Result<String, String> {
    let (k, k2) = (key(issuer)?, key(subject)?);
    let query = match what.trim().strip_prefix("name:") {
        Some(n) => name_query(&k, &LocalName::new(n.trim()).map_err(|e| e.to_string())?, &k2, time),
        None => {
            let e = parse_sexpr(what).map_err(|e| e.to_string())?;
            auth_query(&k, &k2, false, &decode_action(&e).map_err(|e| e.to_string())?, time)
        }
    };
    let (certs, crls) = split(text)?;
    let (granted, d) = ConcreteDecider::new(&certs, &crls).decide(&query).map_err(|e| e.to_string())?;
    Ok(to_json(&Decision { query: encode_tuple(&query), granted, trace: d.map(|d| d.to_string()) }))
}

#[wasm_bindgen]
pub fn reduce(text: &str, rules: &str) -> Result<String, JsError> {
    reduce_json(text, rules).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn timeline(text: &str, issuer: &str, name: &str) -> Result<String, JsError> {
    timeline_json(text, issuer, name).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn decide(text: &str, issuer: &str, subject: &str, what: &str, time: u32) -> Result<String, JsError> {
    decide_json(text, issuer, subject, what, time.into()).map_err(|e| JsError::new(&e))
}
