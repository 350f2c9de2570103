//! Tables, columns and cell values, plus CSV ingestion.

use std::collections::HashSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Spreadsheet-style exceptional values. A cell whose raw text is one of
/// these is an error cell.
pub const ERROR_LEXICON: [&str; 7] = ["#VALUE!", "#N/A", "#NAME?", "#DIV/0!", "#REF!", "NaN", "nan"];

pub fn is_exceptional(raw: &str) -> bool {
    ERROR_LEXICON.contains(&raw)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Text,
    Numeric,
    Logical,
    Error,
    Na,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Text,
    Numeric,
    Logical,
    Error,
    Formula,
    Na,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellValue {
    pub raw: String,
    pub kind: CellKind,
}

impl CellValue {
    /// Builds a cell from CSV text. An empty field is `na`.
    pub fn parse(raw: &str) -> Self {
        Self {
            raw: raw.to_string(),
            kind: infer_kind(raw),
        }
    }

    /// A text cell, even when `raw` is empty.
    pub fn text(raw: impl Into<String>) -> Self {
        Self {
            raw: raw.into(),
            kind: CellKind::Text,
        }
    }

    pub fn na() -> Self {
        Self {
            raw: String::new(),
            kind: CellKind::Na,
        }
    }

    pub fn is_na(&self) -> bool {
        self.kind == CellKind::Na
    }
}

fn infer_kind(raw: &str) -> CellKind {
    if raw.is_empty() {
        CellKind::Na
    } else if is_exceptional(raw) {
        CellKind::Error
    } else if raw.eq_ignore_ascii_case("true") || raw.eq_ignore_ascii_case("false") {
        CellKind::Logical
    } else if is_numeric_literal(raw) {
        CellKind::Numeric
    } else {
        CellKind::Text
    }
}

/// Decimal literal: optional sign, digits with an optional fraction, and an
/// optional exponent. Words such as `inf` are not numbers here.
pub fn is_numeric_literal(s: &str) -> bool {
    let b = s.as_bytes();
    let mut i = 0;
    if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
        i += 1;
    }
    let int_start = i;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    let mut digits = i - int_start;
    if i < b.len() && b[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        digits += i - frac_start;
    }
    if digits == 0 {
        return false;
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        i += 1;
        if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
            i += 1;
        }
        let exp_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i == exp_start {
            return false;
        }
    }
    i == b.len()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub name: String,
    pub values: Vec<CellValue>,
}

impl Column {
    pub fn new(name: impl Into<String>, values: Vec<CellValue>) -> Self {
        Self { name: name.into(), values }
    }

    /// Convenience constructor inferring each cell's kind from its text.
    pub fn from_strs<S: AsRef<str>>(name: impl Into<String>, values: &[S]) -> Self {
        Self::new(name, values.iter().map(|v| CellValue::parse(v.as_ref())).collect())
    }

    pub fn inferred_kind(&self) -> ColumnKind {
        let mut kinds = self.values.iter().map(|v| v.kind).filter(|k| *k != CellKind::Na);
        let Some(first) = kinds.next() else {
            return ColumnKind::Na;
        };
        if kinds.any(|k| k != first) {
            return ColumnKind::Mixed;
        }
        match first {
            CellKind::Text => ColumnKind::Text,
            CellKind::Numeric => ColumnKind::Numeric,
            CellKind::Logical => ColumnKind::Logical,
            CellKind::Error => ColumnKind::Error,
            CellKind::Na => ColumnKind::Na,
        }
    }

    /// Fraction of non-na cells whose kind is text; `None` for an all-na column.
    pub fn text_fraction(&self) -> Option<f64> {
        let non_na = self.values.iter().filter(|v| !v.is_na()).count();
        if non_na == 0 {
            return None;
        }
        let text = self.values.iter().filter(|v| v.kind == CellKind::Text).count();
        Some(text as f64 / non_na as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
    pub row_count: usize,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: Vec<Column>) -> Result<Self> {
        let row_count = columns.first().map_or(0, |c| c.values.len());
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::DuplicateColumn(c.name.clone()));
            }
            if c.values.len() != row_count {
                return Err(Error::Ingest {
                    row: c.values.len() as u64,
                    byte: 0,
                    message: format!("column `{}` has {} values, expected {row_count}", c.name, c.values.len()),
                });
            }
        }
        Ok(Self {
            name: name.into(),
            columns,
            row_count,
        })
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn cell(&self, column: usize, row: usize) -> &CellValue {
        &self.columns[column].values[row]
    }

    pub fn set_cell(&mut self, column: usize, row: usize, raw: &str) {
        let cell = &mut self.columns[column].values[row];
        *cell = CellValue::parse(raw);
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.columns.iter().map(|c| c.name.as_str())).map_err(csv_error)?;
        for row in 0..self.row_count {
            w.write_record(self.columns.iter().map(|c| c.values[row].raw.as_str()))
                .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub has_header: bool,
    pub name: String,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            has_header: true,
            name: "table".to_string(),
        }
    }
}

fn csv_error(e: csv::Error) -> Error {
    let (row, byte) = e.position().map_or((0, 0), |p| (p.line(), p.byte()));
    let message = match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            format!("found record with {len} fields, expected {expected_len}")
        }
        csv::ErrorKind::Utf8 { err, .. } => format!("invalid UTF-8 in field {}", err.field()),
        _ => e.to_string(),
    };
    Error::Ingest { row, byte, message }
}

/// Reads a CSV table (RFC 4180 quoting). Without a header row, columns are
/// named `col1..colm`.
pub fn load_table<R: Read>(source: R, options: &IngestOptions) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(false).from_reader(source);
    let mut records = reader.records();

    let mut names: Vec<String> = Vec::new();
    let mut rows: Vec<Vec<String>> = Vec::new();
    if options.has_header {
        match records.next() {
            Some(r) => names = r.map_err(csv_error)?.iter().map(str::to_string).collect(),
            None => return Table::new(options.name.clone(), Vec::new()),
        }
    }
    for r in records {
        let r = r.map_err(csv_error)?;
        rows.push(r.iter().map(str::to_string).collect());
    }
    if !options.has_header {
        let width = rows.first().map_or(0, Vec::len);
        names = (1..=width).map(|i| format!("col{i}")).collect();
    }

    let mut seen = HashSet::new();
    for n in &names {
        if !seen.insert(n.as_str()) {
            return Err(Error::DuplicateColumn(n.clone()));
        }
    }

    let columns = names
        .iter()
        .enumerate()
        .map(|(ci, name)| Column::new(name.clone(), rows.iter().map(|r| CellValue::parse(&r[ci])).collect()))
        .collect();
    Table::new(options.name.clone(), columns)
}

pub fn load_table_str(csv: &str) -> Result<Table> {
    load_table(csv.as_bytes(), &IngestOptions::default())
}

/// Columns whose non-na cells are at least `threshold` text, in table order.
pub fn select_string_columns(table: &Table, threshold: f64) -> Vec<&Column> {
    table
        .columns
        .iter()
        .filter(|c| c.text_fraction().is_some_and(|f| f >= threshold))
        .collect()
}

pub const DEFAULT_TEXT_THRESHOLD: f64 = 0.9;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_table() {
        let t = load_table_str("id\nA1\nA2").unwrap();
        assert_eq!(t.columns.len(), 1);
        assert_eq!(t.columns[0].name, "id");
        assert_eq!(t.row_count, 2);
        assert_eq!(t.columns[0].inferred_kind(), ColumnKind::Text);
    }

    #[test]
    fn cell_kinds() {
        assert_eq!(CellValue::parse("#VALUE!").kind, CellKind::Error);
        assert_eq!(CellValue::parse("nan").kind, CellKind::Error);
        assert_eq!(CellValue::parse("12.5").kind, CellKind::Numeric);
        assert_eq!(CellValue::parse("-3e4").kind, CellKind::Numeric);
        assert_eq!(CellValue::parse("TRUE").kind, CellKind::Logical);
        assert_eq!(CellValue::parse("").kind, CellKind::Na);
        assert_eq!(CellValue::parse("inf").kind, CellKind::Text);
        assert_eq!(CellValue::parse("1.2.3").kind, CellKind::Text);
        assert_eq!(CellValue::parse(".").kind, CellKind::Text);
    }

    #[test]
    fn duplicate_header_rejected() {
        let err = load_table_str("a,a\n1,2").unwrap_err();
        assert!(matches!(err, Error::DuplicateColumn(ref n) if n == "a"));
    }

    #[test]
    fn ragged_rows_report_position() {
        let err = load_table_str("a,b\n1,2\n3\n").unwrap_err();
        match err {
            Error::Ingest { row, byte, .. } => {
                assert_eq!(row, 3);
                assert!(byte > 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_utf8_is_ingest_error() {
        let bytes = b"a\n\xff\xfe\n";
        let err = load_table(&bytes[..], &IngestOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Ingest { .. }));
    }

    #[test]
    fn headerless_names() {
        let opts = IngestOptions {
            has_header: false,
            ..Default::default()
        };
        let t = load_table("x,1\ny,2\n".as_bytes(), &opts).unwrap();
        assert_eq!(t.columns[0].name, "col1");
        assert_eq!(t.columns[1].name, "col2");
        assert_eq!(t.row_count, 2);
    }

    #[test]
    fn string_column_selection() {
        let t = load_table_str("n,s\n1,a\n2,b\n3,c").unwrap();
        let cols = select_string_columns(&t, DEFAULT_TEXT_THRESHOLD);
        assert_eq!(cols.len(), 1);
        assert_eq!(cols[0].name, "s");

        let numeric_only = load_table_str("n\n1\n2").unwrap();
        assert!(select_string_columns(&numeric_only, DEFAULT_TEXT_THRESHOLD).is_empty());

        let mut values: Vec<String> = (0..19).map(|i| format!("v{i}")).collect();
        values.push("7".into());
        let mostly_text = Table::new("t", vec![Column::from_strs("m", &values)]).unwrap();
        assert_eq!(select_string_columns(&mostly_text, DEFAULT_TEXT_THRESHOLD).len(), 1);
    }

    #[test]
    fn quoted_fields_round_trip() {
        let src = "name,note\n\"Smith, J\",\"said \"\"hi\"\"\"\nplain,x\n";
        let t = load_table_str(src).unwrap();
        assert_eq!(t.cell(0, 0).raw, "Smith, J");
        assert_eq!(t.cell(1, 0).raw, "said \"hi\"");
        let again = load_table_str(&t.to_csv_string()).unwrap();
        assert_eq!(t, again);
    }
}
