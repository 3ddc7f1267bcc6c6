//! Report assembly and output: JSON reports with scenario and content hashes,
//! CSV tables, binary box snapshots, and atomic file writes.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::grid::BoxGrid;
use crate::profile::ProfileStateEuclid;
use crate::scenario::Scenario;

pub const TOOL: &str = "wkb";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Key of the report block excluded from the content hash.
pub const RUNTIMES_KEY: &str = "runtimes";
pub const CONTENT_HASH_KEY: &str = "content_hash";

/// The rules behind every default not spelled out as a number in the
/// scenario.
pub fn default_rules() -> Value {
    serde_json::json!({
        "grid_rule": "smallest power of two >= 4(2 sigma + 2) max|kappa/(eps cell)|, at least 8; cell = gcd of all carrier frequencies kappa/eps",
        "dt_rule": "dt = dt_over_eps * eps unless solver.dt is set; halved while the dt and dt/2 solves differ by more than self_check_fraction * eps, at most max_halvings times",
        "checkpoint_rule": "errors are maxima over checkpoints T i / checkpoints, i = 1..checkpoints",
        "order_rule": "least squares of ln err against ln eps over rows with err > 1e-10",
        "alias_rule": "warning when bins with some |k| > 0.9 n/2 carry more than 1e-8 of the spectral mass",
        "blow_up_rule": "profile integration stops when the E-norm exceeds 1e6 times its initial value",
    })
}

/// A JSON report for one command.
#[derive(Debug)]
pub struct Report {
    body: Map<String, Value>,
    runtimes: Map<String, Value>,
}

impl Report {
    pub fn new(command: &str, scenario: &Scenario) -> Self {
        let mut body = Map::new();
        body.insert("tool".into(), TOOL.into());
        body.insert("version".into(), VERSION.into());
        body.insert("command".into(), command.into());
        body.insert("scenario_hash".into(), scenario.hash().into());
        body.insert(
            "scenario".into(),
            serde_json::to_value(scenario).expect("scenario serializes"),
        );
        body.insert("defaults".into(), default_rules());
        Report {
            body,
            runtimes: Map::new(),
        }
    }

    pub fn set<T: Serialize>(&mut self, key: &str, value: &T) -> Result<()> {
        self.body.insert(key.into(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn runtime(&mut self, key: &str, seconds: f64) {
        self.runtimes.insert(key.into(), seconds.into());
    }

    pub fn runtime_value(&mut self, key: &str, value: Value) {
        self.runtimes.insert(key.into(), value);
    }

    /// SHA-256 over the report without its runtimes.
    pub fn content_hash(&self) -> String {
        let canonical = serde_json::to_string(&Value::Object(self.body.clone())).expect("json");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    /// Pretty JSON with the content hash and, last, the runtimes block.
    pub fn to_json(&self) -> String {
        let mut out = self.body.clone();
        out.insert(CONTENT_HASH_KEY.into(), self.content_hash().into());
        if !self.runtimes.is_empty() {
            out.insert(RUNTIMES_KEY.into(), Value::Object(self.runtimes.clone()));
        }
        let mut s = serde_json::to_string_pretty(&Value::Object(out)).expect("json");
        s.push('\n');
        s
    }
}

/// Removes the runtimes block from a report document, for comparisons.
pub fn strip_runtimes(report: &str) -> Result<Value> {
    let mut v: Value = serde_json::from_str(report)?;
    if let Value::Object(m) = &mut v {
        m.remove(RUNTIMES_KEY);
    }
    Ok(v)
}

/// Formats floats in their shortest round-trip form, `NaN` and `inf` as
/// such, and `None` as an empty field.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Quotes a CSV field when it contains a separator, quote or newline.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// A CSV table built row by row.
#[derive(Clone, Debug)]
pub struct Csv {
    text: String,
    width: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Csv {
            text,
            width: header.len(),
        }
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) {
        debug_assert_eq!(fields.len(), self.width, "CSV row width");
        let line: Vec<String> = fields.iter().map(|f| csv_field(f.as_ref())).collect();
        let _ = writeln!(self.text, "{}", line.join(","));
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}

const BOX_MAGIC: &[u8; 4] = b"WKBE";
const BOX_VERSION: u32 = 1;

/// Binary trajectory of Euclidean profiles: "WKBE", u32 version, u32 d,
/// u64 n, f64 box length, u64 mode count, u64 frame count, then per frame
/// f64 t followed by every mode's n^d (re, im) pairs; all little-endian.
pub fn box_trajectory_bytes(grid: &BoxGrid, frames: &[ProfileStateEuclid]) -> Vec<u8> {
    let modes = frames.first().map_or(0, |f| f.fields.len());
    let mut out = Vec::with_capacity(48 + frames.len() * (8 + modes * grid.len() * 16));
    out.extend_from_slice(BOX_MAGIC);
    out.extend_from_slice(&BOX_VERSION.to_le_bytes());
    out.extend_from_slice(&(grid.d as u32).to_le_bytes());
    out.extend_from_slice(&(grid.n as u64).to_le_bytes());
    out.extend_from_slice(&grid.length.to_le_bytes());
    out.extend_from_slice(&(modes as u64).to_le_bytes());
    out.extend_from_slice(&(frames.len() as u64).to_le_bytes());
    for f in frames {
        out.extend_from_slice(&f.t.to_le_bytes());
        for v in f.fields.iter().flatten() {
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    out
}

/// Writes `bytes` to `path` through a temporary file in the same directory,
/// renamed into place once complete.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
