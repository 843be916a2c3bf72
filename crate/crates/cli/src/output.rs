use std::fmt::Write as _;
use std::path::Path;
use std::time::Duration;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub inputs: Vec<InputDigest>,
    pub config: Value,
    pub version: String,
    pub wall_time_ms: u64,
}

/// Reads a file and records its digest.
pub fn read_input(path: &Path, inputs: &mut Vec<InputDigest>) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    inputs.push(InputDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    });
    String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))
}

impl RunManifest {
    pub fn new(command: Vec<String>, inputs: Vec<InputDigest>, config: Value, elapsed: Duration) -> Self {
        RunManifest {
            command,
            inputs,
            config,
            version: otgroups::VERSION.to_string(),
            wall_time_ms: elapsed.as_millis() as u64,
        }
    }
}

/// Keys whose string values are point names, never numbers.
const ID_KEYS: &[&str] = &["point", "source", "sink", "g", "f", "x", "y", "z", "id", "path", "sha256"];

fn is_rational(s: &str) -> Option<f64> {
    let (n, d) = s.split_once('/')?;
    let n: f64 = n.parse().ok()?;
    let d: f64 = d.parse().ok()?;
    Some(n / d)
}

/// Adds a `<key>_float` sibling next to every exact rational field.
pub fn add_floats(v: &mut Value) {
    match v {
        Value::Array(items) => items.iter_mut().for_each(add_floats),
        Value::Object(map) => {
            let mut extra = Map::new();
            for (k, child) in map.iter_mut() {
                match child {
                    Value::String(s) if !ID_KEYS.contains(&k.as_str()) => {
                        if let Some(x) = is_rational(s) {
                            extra.insert(format!("{k}_float"), Value::from(x));
                        }
                    }
                    _ => add_floats(child),
                }
            }
            map.extend(extra);
        }
        _ => {}
    }
}

/// Left-aligned columns separated by two spaces.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in width.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (i, (cell, w)) in cells.iter().zip(&width).enumerate() {
            if i + 1 == cells.len() {
                s.push_str(cell);
            } else {
                let pad = w - cell.chars().count();
                let _ = write!(s, "{cell}{}  ", " ".repeat(pad));
            }
        }
        out.push_str(s.trim_end());
        out.push('\n');
    };
    line(header.to_vec());
    for row in rows {
        line(row.iter().map(String::as_str).collect());
    }
    out
}

/// Exact rational with an optional decimal approximation.
pub fn num(s: &str, float: bool) -> String {
    match (float, is_rational(s)) {
        (true, Some(x)) => format!("{s} (~{x:.6})"),
        _ => s.to_string(),
    }
}
