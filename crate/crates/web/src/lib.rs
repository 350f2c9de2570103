//! WebAssembly bindings for the browser demo.
//!
//! Every export takes CSV text plus a JSON options object and returns a JSON
//! string. Errors are thrown as JavaScript strings.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use strfix::corruptor::{corrupt as corrupt_table, CorruptionEntry, NoiseSpec};
use strfix::pipeline::{apply_repairs, run_column, string_columns, ColumnResult, Detection, RunConfig, SemanticMode};
use strfix::report::Report;
use strfix::semantics::DictionaryOracle;
use strfix::table::{load_table_str, Table};

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
pub struct Options {
    pub delta: Option<f64>,
    pub k: Option<usize>,
    pub top_n: Option<usize>,
    /// Disable semantic masking.
    pub no_semantics: bool,
    /// Column names; all string columns when empty.
    pub columns: Vec<String>,
}

impl Options {
    fn parse(json: &str) -> Result<Self, String> {
        if json.trim().is_empty() {
            return Ok(Self::default());
        }
        serde_json::from_str(json).map_err(|e| format!("options: {e}"))
    }

    fn config(&self) -> Result<RunConfig, String> {
        let d = RunConfig::default();
        let c = RunConfig {
            delta: self.delta.unwrap_or(d.delta),
            k: self.k.unwrap_or(d.k),
            top_n: self.top_n.unwrap_or(d.top_n),
            semantic: if self.no_semantics {
                SemanticMode::NoAbstraction
            } else {
                SemanticMode::Full
            },
            ..d
        };
        c.validate().map_err(|e| e.to_string())?;
        Ok(c)
    }
}

fn run(csv: &str, options: &Options) -> Result<(Table, RunConfig, Vec<ColumnResult>), String> {
    let table = load_table_str(csv).map_err(|e| e.to_string())?;
    let config = options.config()?;
    let columns = if options.columns.is_empty() {
        string_columns(&table, &config)
    } else {
        options
            .columns
            .iter()
            .map(|n| table.column_index(n).ok_or_else(|| format!("unknown column `{n}`")))
            .collect::<Result<_, _>>()?
    };
    let oracle = DictionaryOracle::bundled();
    let results = columns
        .iter()
        .map(|&ci| run_column(&table, ci, &config, &oracle, &Detection::Unsupervised))
        .collect();
    Ok((table, config, results))
}

fn json<T: Serialize>(v: &T) -> Result<String, String> {
    strfix::report::to_json(v).map_err(|e| e.to_string())
}

pub fn detect_json(csv: &str, options: &str) -> Result<String, String> {
    let (_, config, results) = run(csv, &Options::parse(options)?)?;
    json(&Report::new("detect", "input", &config, results).detections_only())
}

#[derive(Serialize)]
struct RepairOutput {
    report: Report,
    repaired_csv: String,
}

pub fn repair_json(csv: &str, options: &str) -> Result<String, String> {
    let (table, config, results) = run(csv, &Options::parse(options)?)?;
    let repaired_csv = apply_repairs(&table, &results).to_csv_string();
    json(&RepairOutput {
        report: Report::new("repair", "input", &config, results),
        repaired_csv,
    })
}

#[derive(Serialize)]
struct CorruptOutput {
    csv: String,
    entries: Vec<CorruptionEntry>,
}

pub fn corrupt_json(csv: &str, seed: u64, rate: f64) -> Result<String, String> {
    let table = load_table_str(csv).map_err(|e| e.to_string())?;
    let spec = NoiseSpec {
        cell_probability: rate,
        seed,
        ..Default::default()
    };
    let (dirty, log) = corrupt_table(&table, &spec).map_err(|e| e.to_string())?;
    json(&CorruptOutput {
        csv: dirty.to_csv_string(),
        entries: log.entries,
    })
}

/// Detection report for the string columns of `csv`.
#[wasm_bindgen]
pub fn detect(csv: &str, options: &str) -> Result<String, JsValue> {
    detect_json(csv, options).map_err(|e| JsValue::from_str(&e))
}

/// Repair report plus the table with top repairs applied.
#[wasm_bindgen]
pub fn repair(csv: &str, options: &str) -> Result<String, JsValue> {
    repair_json(csv, options).map_err(|e| JsValue::from_str(&e))
}

/// Injects synthetic errors. `seed` is a JS number, truncated to an integer.
#[wasm_bindgen]
pub fn corrupt(csv: &str, seed: f64, rate: f64) -> Result<String, JsValue> {
    corrupt_json(csv, seed.max(0.0) as u64, rate).map_err(|e| JsValue::from_str(&e))
}
