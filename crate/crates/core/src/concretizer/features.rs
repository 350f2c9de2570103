//! Boolean row predicates over every column of a table.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;

use crate::table::{CellKind, CellValue, Table};

/// Most constants kept per (column, template), by frequency.
pub const MAX_CONSTANTS: usize = 100;
/// Most frequent cell lengths used as `length` constants.
pub const TOP_LENGTHS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Template {
    Equals,
    Contains,
    StartsWith,
    EndsWith,
    Length,
    HasDigits,
    IsNum,
    IsError,
    IsFormula,
    IsLogical,
    IsNa,
    IsText,
}

impl Template {
    fn name(self) -> &'static str {
        match self {
            Template::Equals => "equals",
            Template::Contains => "contains",
            Template::StartsWith => "startsWith",
            Template::EndsWith => "endsWith",
            Template::Length => "length",
            Template::HasDigits => "hasDigits",
            Template::IsNum => "isNum",
            Template::IsError => "isError",
            Template::IsFormula => "isFormula",
            Template::IsLogical => "isLogical",
            Template::IsNa => "isNA",
            Template::IsText => "isText",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(untagged)]
pub enum Constant {
    Text(String),
    Int(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Predicate {
    pub template: Template,
    pub column: String,
    pub column_index: usize,
    pub constant: Option<Constant>,
}

impl Predicate {
    pub fn eval(&self, cell: &CellValue) -> bool {
        let raw = cell.raw.as_str();
        let text = |c: &Option<Constant>| match c {
            Some(Constant::Text(s)) => s.clone(),
            _ => String::new(),
        };
        match self.template {
            Template::Equals => !cell.is_na() && raw == text(&self.constant),
            Template::Contains => !cell.is_na() && raw.contains(&text(&self.constant)),
            Template::StartsWith => !cell.is_na() && raw.starts_with(&text(&self.constant)),
            Template::EndsWith => !cell.is_na() && raw.ends_with(&text(&self.constant)),
            Template::Length => matches!(self.constant, Some(Constant::Int(n)) if raw.chars().count() == n),
            Template::HasDigits => raw.chars().any(|c| c.is_ascii_digit()),
            Template::IsNum => cell.kind == CellKind::Numeric,
            Template::IsError => cell.kind == CellKind::Error,
            // CSV input carries no formulas.
            Template::IsFormula => false,
            Template::IsLogical => cell.kind == CellKind::Logical,
            Template::IsNa => cell.kind == CellKind::Na,
            Template::IsText => cell.kind == CellKind::Text,
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}", self.template.name(), self.column)?;
        match &self.constant {
            Some(Constant::Text(s)) => write!(f, ", {s}")?,
            Some(Constant::Int(n)) => write!(f, ", {n}")?,
            None => {}
        }
        f.write_str(")")
    }
}

impl Serialize for Predicate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Fixed-size set of row indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bitset {
    words: Vec<u64>,
    len: usize,
}

impl Bitset {
    pub fn new(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_fn(len: usize, f: impl Fn(usize) -> bool) -> Self {
        let mut b = Self::new(len);
        for i in 0..len {
            if f(i) {
                b.insert(i);
            }
        }
        b
    }

    pub fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn and(&self, other: &Bitset) -> Bitset {
        Bitset {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect(),
            len: self.len,
        }
    }

    pub fn and_not(&self, other: &Bitset) -> Bitset {
        Bitset {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & !b).collect(),
            len: self.len,
        }
    }

    /// `|self ∩ other|` without allocating.
    pub fn count_and(&self, other: &Bitset) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn count_and3(&self, b: &Bitset, c: &Bitset) -> usize {
        self.words
            .iter()
            .zip(&b.words)
            .zip(&c.words)
            .map(|((x, y), z)| (x & y & z).count_ones() as usize)
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(|&i| self.contains(i))
    }
}

/// Splits a value into constants: runs between non-alphanumeric characters,
/// further split at lower-to-upper case changes and letter/digit boundaries.
pub fn split_tokens(value: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut cur = String::new();
    let mut prev: Option<char> = None;
    for c in value.chars() {
        if !c.is_alphanumeric() {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            prev = None;
            continue;
        }
        if let Some(p) = prev {
            let case_change = p.is_lowercase() && c.is_uppercase();
            let kind_change = p.is_alphabetic() != c.is_alphabetic();
            if case_change || kind_change {
                out.push(std::mem::take(&mut cur));
            }
        }
        cur.push(c);
        prev = Some(c);
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Predicates and their truth values on every row.
#[derive(Debug, Clone, Default)]
pub struct FeatureMatrix {
    pub predicates: Vec<Predicate>,
    pub values: Vec<Bitset>,
    pub rows: usize,
}

fn top_constants(counts: HashMap<String, usize>, cap: usize) -> Vec<String> {
    let mut v: Vec<(String, usize)> = counts.into_iter().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v.truncate(cap);
    v.into_iter().map(|(s, _)| s).collect()
}

impl FeatureMatrix {
    /// Builds predicates over every column. Columns are visited in table
    /// order except `last`, whose predicates come after all others so that
    /// ties between equally good features prefer other columns.
    pub fn build(table: &Table, last: Option<usize>) -> Self {
        let mut order: Vec<usize> = (0..table.columns.len()).filter(|&c| Some(c) != last).collect();
        order.extend(last);
        let mut predicates = Vec::new();
        let mut values = Vec::new();
        for ci in order {
            let col = &table.columns[ci];
            for p in column_predicates(&col.name, ci, &col.values) {
                let bits = Bitset::from_fn(table.row_count, |r| p.eval(&col.values[r]));
                let n = bits.count();
                if n == 0 || n == table.row_count {
                    continue;
                }
                predicates.push(p);
                values.push(bits);
            }
        }
        Self {
            predicates,
            values,
            rows: table.row_count,
        }
    }

    /// Truth values of every predicate on one row.
    pub fn row(&self, row: usize) -> Vec<bool> {
        self.values.iter().map(|b| b.contains(row)).collect()
    }

    pub fn len(&self) -> usize {
        self.predicates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predicates.is_empty()
    }
}

fn column_predicates(name: &str, index: usize, cells: &[CellValue]) -> Vec<Predicate> {
    let mk = |template, constant| Predicate {
        template,
        column: name.to_string(),
        column_index: index,
        constant,
    };
    let mut equals: HashMap<String, usize> = HashMap::new();
    let mut tokens: HashMap<String, usize> = HashMap::new();
    let mut lengths: BTreeMap<usize, usize> = BTreeMap::new();
    for c in cells.iter().filter(|c| !c.is_na()) {
        *equals.entry(c.raw.clone()).or_default() += 1;
        *lengths.entry(c.raw.chars().count()).or_default() += 1;
        let mut toks = split_tokens(&c.raw);
        toks.sort();
        toks.dedup();
        for t in toks {
            *tokens.entry(t).or_default() += 1;
        }
    }
    let mut contains = tokens.clone();
    for (v, n) in &equals {
        *contains.entry(v.clone()).or_default() += n;
    }

    let mut out = Vec::new();
    for v in top_constants(equals, MAX_CONSTANTS) {
        out.push(mk(Template::Equals, Some(Constant::Text(v))));
    }
    for v in top_constants(contains, MAX_CONSTANTS) {
        out.push(mk(Template::Contains, Some(Constant::Text(v))));
    }
    let toks = top_constants(tokens, MAX_CONSTANTS);
    for v in &toks {
        out.push(mk(Template::StartsWith, Some(Constant::Text(v.clone()))));
    }
    for v in toks {
        out.push(mk(Template::EndsWith, Some(Constant::Text(v))));
    }
    let mut lens: Vec<(usize, usize)> = lengths.into_iter().collect();
    lens.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    for (l, _) in lens.into_iter().take(TOP_LENGTHS) {
        out.push(mk(Template::Length, Some(Constant::Int(l))));
    }
    for t in [
        Template::HasDigits,
        Template::IsNum,
        Template::IsError,
        Template::IsFormula,
        Template::IsLogical,
        Template::IsNa,
        Template::IsText,
    ] {
        out.push(mk(t, None));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::Column;

    #[test]
    fn token_splitting() {
        assert_eq!(split_tokens("AB12"), vec!["AB", "12"]);
        assert_eq!(split_tokens("Ind-674-Pro"), vec!["Ind", "674", "Pro"]);
        assert_eq!(split_tokens("camelCase"), vec!["camel", "Case"]);
        assert!(split_tokens("--").is_empty());
    }

    #[test]
    fn contains_features_of_a_row() {
        let t = Table::new(
            "t",
            vec![Column::from_strs("Player ID", &["Ind-674-Pro", "US-120-Jun", "UK-332-Pro"])],
        )
        .unwrap();
        let f = FeatureMatrix::build(&t, None);
        let row0: Vec<String> = f
            .predicates
            .iter()
            .zip(f.row(0))
            .filter(|(p, v)| *v && p.template == Template::Contains)
            .map(|(p, _)| p.to_string())
            .collect();
        for expected in ["Ind", "674", "Pro", "Ind-674-Pro"] {
            assert!(row0.contains(&format!("contains(Player ID, {expected})")), "{row0:?}");
        }
    }

    #[test]
    fn constant_predicates_are_dropped() {
        let t = Table::new("t", vec![Column::from_strs("c", &["ab", "ab", "ab"])]).unwrap();
        let f = FeatureMatrix::build(&t, None);
        assert!(f.is_empty());
    }

    #[test]
    fn target_column_comes_last() {
        let t = Table::new("t", vec![Column::from_strs("a", &["x", "y"]), Column::from_strs("b", &["p", "q"])]).unwrap();
        let f = FeatureMatrix::build(&t, Some(0));
        assert_eq!(f.predicates.first().unwrap().column, "b");
        assert_eq!(f.predicates.last().unwrap().column, "a");
    }

    #[test]
    fn bitset_ops() {
        let a = Bitset::from_fn(130, |i| i % 2 == 0);
        let b = Bitset::from_fn(130, |i| i % 3 == 0);
        assert_eq!(a.count(), 65);
        assert_eq!(a.count_and(&b), a.and(&b).count());
        assert_eq!(a.and_not(&b).count(), 65 - a.count_and(&b));
        assert_eq!(a.iter().take(3).collect::<Vec<_>>(), vec![0, 2, 4]);
    }
}
