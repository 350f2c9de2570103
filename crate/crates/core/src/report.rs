//! Versioned JSON reports.
//!
//! Reports are rendered through [`to_json`], which prints every float with
//! six decimals so that repeated runs produce identical bytes.

use serde::Serialize;
use serde_json::Value;

use crate::exec::{RepairMode, Verification};
use crate::pipeline::{ColumnResult, RunConfig};
use crate::Result;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub columns: usize,
    pub rows: usize,
    pub detections: usize,
    pub repaired: usize,
    pub unrepaired: usize,
    /// Mean of the per-column fire rates.
    pub fire_rate: f64,
}

impl Summary {
    pub fn of(columns: &[ColumnResult]) -> Self {
        let fire_rate = if columns.is_empty() {
            0.0
        } else {
            columns.iter().map(|c| c.fire_rate).sum::<f64>() / columns.len() as f64
        };
        Summary {
            columns: columns.len(),
            rows: columns.iter().map(|c| c.rows).max().unwrap_or(0),
            detections: columns.iter().map(|c| c.detections.len()).sum(),
            repaired: columns.iter().map(|c| c.repairs.len()).sum(),
            unrepaired: columns.iter().map(|c| c.unrepaired.len()).sum(),
            fire_rate,
        }
    }
}

/// One formula run of the execution-guided mode.
#[derive(Debug, Clone, Serialize)]
pub struct ExecSection {
    pub formula: String,
    pub before: Verification,
    pub runs: Vec<ExecRun>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExecRun {
    pub mode: RepairMode,
    pub verification: Verification,
    pub columns: Vec<ColumnResult>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub input: String,
    pub config: RunConfig,
    pub columns: Vec<ColumnResult>,
    pub summary: Summary,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exec: Option<ExecSection>,
}

impl Report {
    pub fn new(command: &str, input: &str, config: &RunConfig, columns: Vec<ColumnResult>) -> Self {
        let summary = Summary::of(&columns);
        Report {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            input: input.into(),
            config: config.clone(),
            columns,
            summary,
            warnings: Vec::new(),
            exec: None,
        }
    }

    /// Drops repairs, for detection-only output.
    pub fn detections_only(mut self) -> Self {
        for c in &mut self.columns {
            c.repairs.clear();
            c.unrepaired.clear();
            c.constraints.clear();
        }
        self.summary = Summary::of(&self.columns);
        self
    }

    pub fn to_json(&self) -> Result<String> {
        to_json(self)
    }
}

/// Pretty JSON with floats fixed to six decimals.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&v, 0, &mut out);
    out.push('\n');
    Ok(out)
}

pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        let s = format!("{x:.6}");
        // Avoid "-0.000000".
        if s.trim_start_matches('-').bytes().all(|b| b == b'0' || b == b'.') {
            "0.000000".into()
        } else {
            s
        }
    } else {
        "null".into()
    }
}

fn indent(depth: usize, out: &mut String) {
    out.extend(std::iter::repeat_n("  ", depth));
}

fn write_value(v: &Value, depth: usize, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => out.push_str(&i.to_string()),
            (_, Some(u)) => out.push_str(&u.to_string()),
            _ => out.push_str(&format_float(n.as_f64().unwrap_or(f64::NAN))),
        },
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                indent(depth + 1, out);
                write_value(item, depth + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            indent(depth, out);
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push_str("{\n");
            for (i, (k, item)) in map.iter().enumerate() {
                indent(depth + 1, out);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(item, depth + 1, out);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            indent(depth, out);
            out.push('}');
        }
    }
}
