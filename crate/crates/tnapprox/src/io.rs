//! JSON network files.
//!
//! ```json
//! { "format_version": 1,
//!   "vertices": [ { "id": 0, "modes": [ { "label": 7, "size": 2 } ], "data": [0.5, 1.0] } ],
//!   "edges": [ { "label": 7, "endpoints": [0] } ] }
//! ```
//!
//! `data` is row-major with the last mode fastest. `edges` lists every label
//! once with one endpoint (uncontracted) or two (contracted) and must agree
//! with the vertices.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::netgraph::TensorNetwork;
use crate::tensor::{Mode, Tensor};

pub const FORMAT_VERSION: u64 = 1;

fn parse_err(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse { field: field.into(), message: message.into() }
}

fn get<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| parse_err(format!("{path}{key}"), "missing"))
}

fn as_object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| parse_err(path, "expected an object"))
}

fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| parse_err(path, "expected an array"))
}

fn as_u64(v: &Value, path: &str) -> Result<u64> {
    v.as_u64().ok_or_else(|| parse_err(path, "expected a non-negative integer"))
}

fn as_f64(v: &Value, path: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| parse_err(path, "expected a number"))
}

/// Parses a network document and checks it against its own edge list.
pub fn parse_network(text: &str) -> Result<TensorNetwork> {
    let doc: Value = serde_json::from_str(text).map_err(|e| parse_err("<document>", e.to_string()))?;
    let root = as_object(&doc, "<document>")?;
    let version = as_u64(get(root, "format_version", "")?, "format_version")?;
    if version != FORMAT_VERSION {
        return Err(parse_err("format_version", format!("unsupported version {version}")));
    }
    let mut tensors = BTreeMap::new();
    for (i, v) in as_array(get(root, "vertices", "")?, "vertices")?.iter().enumerate() {
        let p = format!("vertices[{i}]");
        let obj = as_object(v, &p)?;
        let id = as_u64(get(obj, "id", &format!("{p}."))?, &format!("{p}.id"))? as usize;
        let mut modes = Vec::new();
        for (j, m) in as_array(get(obj, "modes", &format!("{p}."))?, &format!("{p}.modes"))?.iter().enumerate() {
            let mp = format!("{p}.modes[{j}]");
            let mo = as_object(m, &mp)?;
            let label = as_u64(get(mo, "label", &format!("{mp}."))?, &format!("{mp}.label"))?;
            let size = as_u64(get(mo, "size", &format!("{mp}."))?, &format!("{mp}.size"))? as usize;
            modes.push(Mode::new(label, size));
        }
        let data = as_array(get(obj, "data", &format!("{p}."))?, &format!("{p}.data"))?
            .iter()
            .enumerate()
            .map(|(k, x)| as_f64(x, &format!("{p}.data[{k}]")))
            .collect::<Result<Vec<f64>>>()?;
        let t = Tensor::new(modes, data).map_err(|e| parse_err(format!("{p}.data"), e.to_string()))?;
        if tensors.insert(id, t).is_some() {
            return Err(parse_err(format!("{p}.id"), format!("duplicate vertex id {id}")));
        }
    }
    let g = TensorNetwork::from_map(tensors)?;
    let actual = g.edge_map();
    let listed = as_array(get(root, "edges", "")?, "edges")?;
    let mut seen = BTreeMap::new();
    for (i, e) in listed.iter().enumerate() {
        let p = format!("edges[{i}]");
        let obj = as_object(e, &p)?;
        let label = as_u64(get(obj, "label", &format!("{p}."))?, &format!("{p}.label"))?;
        let mut ends = as_array(get(obj, "endpoints", &format!("{p}."))?, &format!("{p}.endpoints"))?
            .iter()
            .map(|x| as_u64(x, &format!("{p}.endpoints")).map(|x| x as usize))
            .collect::<Result<Vec<usize>>>()?;
        ends.sort_unstable();
        let want = actual.get(&label).ok_or_else(|| parse_err(format!("{p}.label"), format!("no vertex has label {label}")))?;
        let mut have: Vec<usize> = [Some(want.a), want.b].into_iter().flatten().collect();
        have.sort_unstable();
        if ends != have {
            return Err(parse_err(format!("{p}.endpoints"), format!("label {label} sits on vertices {have:?}")));
        }
        if seen.insert(label, ()).is_some() {
            return Err(parse_err(format!("{p}.label"), format!("label {label} listed twice")));
        }
    }
    if let Some(l) = actual.keys().find(|l| !seen.contains_key(l)) {
        return Err(parse_err("edges", format!("label {l} is not listed")));
    }
    Ok(g)
}

pub fn network_to_json(g: &TensorNetwork) -> Value {
    let vertices: Vec<Value> = g
        .tensors()
        .map(|(v, t)| {
            let modes: Vec<Value> = t.modes().iter().map(|m| json!({ "label": m.id, "size": m.size })).collect();
            json!({ "id": v, "modes": modes, "data": t.data() })
        })
        .collect();
    let edges: Vec<Value> = g
        .edges()
        .into_iter()
        .map(|e| {
            let ends: Vec<usize> = [Some(e.a), e.b].into_iter().flatten().collect();
            json!({ "label": e.mode.id, "endpoints": ends })
        })
        .collect();
    json!({ "format_version": FORMAT_VERSION, "vertices": vertices, "edges": edges })
}

pub fn load_network(path: &Path) -> Result<TensorNetwork> {
    parse_network(&std::fs::read_to_string(path)?)
}

pub fn save_network(g: &TensorNetwork, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(&network_to_json(g)).expect("json values serialize");
    std::fs::write(path, text)?;
    Ok(())
}
