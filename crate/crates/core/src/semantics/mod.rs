//! Semantic abstraction of column values.
//!
//! An oracle rewrites each value by wrapping semantic substrings as
//! `{type(suggestion)}`, e.g. `"u.k.-392"` becomes `"{country(UK)}-392"`.
//! The annotated text is validated against the original value, and every
//! span is replaced by the single mask symbol of its type so that the
//! profiler and edit engine treat it as one atomic symbol. The mask table
//! keeps the original substring and the oracle's suggestion for each span so
//! repaired values can be concretized again.

mod dictionary;
#[cfg(feature = "http-oracle")]
mod http;

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use crate::alphabet;
use crate::{Error, Result};

pub use dictionary::{DictionaryFile, DictionaryOracle};
#[cfg(feature = "http-oracle")]
pub use http::{HttpOracle, HttpOracleConfig};

pub const DEFAULT_BATCH_SIZE: usize = 100;

const DEFAULT_TYPES: [&str; 20] = [
    "name",
    "country",
    "city",
    "state",
    "region",
    "language",
    "nationality",
    "currency",
    "company",
    "day",
    "month",
    "weekday",
    "gender",
    "continent",
    "team",
    "county",
    "color",
    "brand",
    "symbol",
    "category",
];

/// Ordered semantic type names. A type's position fixes its mask symbol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SemanticTypeList {
    types: Vec<String>,
}

impl Default for SemanticTypeList {
    fn default() -> Self {
        Self {
            types: DEFAULT_TYPES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl SemanticTypeList {
    pub fn new(types: Vec<String>) -> Result<Self> {
        if types.is_empty() {
            return Err(Error::Config("semantic type list is empty".into()));
        }
        let mut seen = BTreeSet::new();
        for t in &types {
            if t.is_empty() || t.contains(['{', '}', '(', ')']) {
                return Err(Error::Config(format!("invalid semantic type name `{t}`")));
            }
            if !seen.insert(t) {
                return Err(Error::Config(format!("duplicate semantic type `{t}`")));
            }
        }
        Ok(Self { types })
    }

    /// Reads a type list: a JSON array of names, or one name per line.
    pub fn parse(text: &str) -> Result<Self> {
        let trimmed = text.trim_start();
        let types: Vec<String> = if trimmed.starts_with('[') {
            serde_json::from_str(trimmed)?
        } else {
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(String::from)
                .collect()
        };
        Self::new(types)
    }

    pub fn names(&self) -> &[String] {
        &self.types
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.types.iter().position(|t| t == name)
    }

    pub fn symbol_of(&self, name: &str) -> Option<char> {
        self.index_of(name).map(alphabet::mask_symbol)
    }

    pub fn name_of(&self, symbol: char) -> Option<&str> {
        alphabet::mask_index(symbol).and_then(|i| self.types.get(i)).map(String::as_str)
    }
}

/// Produces annotated values for a batch of a column.
pub trait SemanticOracle: Send + Sync {
    /// Largest number of values per call.
    fn max_batch(&self) -> usize {
        DEFAULT_BATCH_SIZE
    }

    /// Types this oracle can recognize; `None` means any.
    fn supported_types(&self) -> Option<Vec<String>> {
        None
    }

    /// Returns one annotated string per input value, in order.
    fn annotate(&self, values: &[String], types: &SemanticTypeList) -> Result<Vec<String>>;
}

/// An oracle that never masks anything.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityOracle;

impl SemanticOracle for IdentityOracle {
    fn annotate(&self, values: &[String], _types: &SemanticTypeList) -> Result<Vec<String>> {
        Ok(values.to_vec())
    }
}

/// One masked span of a value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MaskEntry {
    #[serde(serialize_with = "serialize_symbol")]
    pub symbol: char,
    #[serde(rename = "type")]
    pub type_name: String,
    /// Char offset of the span in the raw value.
    pub start: usize,
    pub original: String,
    pub suggestion: String,
}

fn serialize_symbol<S: serde::Serializer>(c: &char, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("m{}", alphabet::mask_index(*c).map_or(0, |i| i + 1)))
}

/// A column after semantic abstraction.
#[derive(Debug, Clone, Default)]
pub struct MaskedColumn {
    pub raw: Vec<String>,
    /// Oracle output after validation (equal to the raw value when unmasked).
    pub annotated: Vec<String>,
    /// Values with each span replaced by its mask symbol.
    pub masked_values: Vec<String>,
    pub mask_table: Vec<Vec<MaskEntry>>,
    pub alphabet_extension: BTreeSet<char>,
    pub warnings: Vec<String>,
}

impl MaskedColumn {
    /// The column with nothing masked.
    pub fn identity(values: &[String]) -> Self {
        Self {
            raw: values.to_vec(),
            annotated: values.to_vec(),
            masked_values: values.to_vec(),
            mask_table: vec![Vec::new(); values.len()],
            alphabet_extension: BTreeSet::new(),
            warnings: Vec::new(),
        }
    }

    pub fn has_masks(&self) -> bool {
        !self.alphabet_extension.is_empty()
    }

    /// For each mask symbol, the most frequent original and suggestion
    /// (ties broken lexicographically).
    pub fn donors(&self) -> HashMap<char, (String, String)> {
        let mut counts: HashMap<char, HashMap<(&str, &str), usize>> = HashMap::new();
        for e in self.mask_table.iter().flatten() {
            *counts.entry(e.symbol).or_default().entry((&e.original, &e.suggestion)).or_default() += 1;
        }
        counts
            .into_iter()
            .map(|(sym, c)| {
                let best = c
                    .into_iter()
                    .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(&a.0)))
                    .map(|((o, s), _)| (o.to_string(), s.to_string()))
                    .unwrap();
                (sym, best)
            })
            .collect()
    }
}

/// A span parsed out of an annotated value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedSpan {
    pub type_name: String,
    pub payload: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Text(String),
    Span(AnnotatedSpan),
}

fn split_annotated(annotated: &str, types: &SemanticTypeList) -> Vec<Piece> {
    let chars: Vec<char> = annotated.chars().collect();
    let mut pieces = Vec::new();
    let mut text = String::new();
    let mut i = 0;
    'outer: while i < chars.len() {
        if chars[i] == '{' {
            if let Some(open) = chars[i + 1..].iter().position(|&c| c == '(') {
                let name: String = chars[i + 1..i + 1 + open].iter().collect();
                if types.index_of(&name).is_some() {
                    let body = i + 2 + open;
                    let mut j = body;
                    while j + 1 < chars.len() {
                        if chars[j] == ')' && chars[j + 1] == '}' {
                            if !text.is_empty() {
                                pieces.push(Piece::Text(std::mem::take(&mut text)));
                            }
                            pieces.push(Piece::Span(AnnotatedSpan {
                                type_name: name,
                                payload: chars[body..j].iter().collect(),
                            }));
                            i = j + 2;
                            continue 'outer;
                        }
                        j += 1;
                    }
                }
            }
        }
        text.push(chars[i]);
        i += 1;
    }
    if !text.is_empty() {
        pieces.push(Piece::Text(text));
    }
    pieces
}

/// Aligns literal pieces with `original`; each span must cover a non-empty
/// substring. Returns the (start, end) char range of every span.
fn align(pieces: &[Piece], original: &[char]) -> Option<Vec<(usize, usize)>> {
    fn go(pieces: &[Piece], original: &[char], pos: usize, out: &mut Vec<(usize, usize)>) -> bool {
        match pieces.first() {
            None => pos == original.len(),
            Some(Piece::Text(t)) => {
                let t: Vec<char> = t.chars().collect();
                original[pos..].starts_with(&t) && go(&pieces[1..], original, pos + t.len(), out)
            }
            Some(Piece::Span(_)) => {
                for end in pos + 1..=original.len() {
                    out.push((pos, end));
                    if go(&pieces[1..], original, end, out) {
                        return true;
                    }
                    out.pop();
                }
                false
            }
        }
    }
    let mut out = Vec::new();
    go(pieces, original, 0, &mut out).then_some(out)
}

/// Validates one oracle output against its original value.
pub fn parse_annotation(original: &str, annotated: &str, types: &SemanticTypeList) -> Option<Vec<MaskEntry>> {
    let pieces = split_annotated(annotated, types);
    let chars: Vec<char> = original.chars().collect();
    let ranges = align(&pieces, &chars)?;
    let spans = pieces.iter().filter_map(|p| match p {
        Piece::Span(s) => Some(s),
        Piece::Text(_) => None,
    });
    spans
        .zip(ranges)
        .map(|(s, (a, b))| {
            if s.payload.is_empty() || s.payload.chars().any(alphabet::is_mask) {
                return None;
            }
            Some(MaskEntry {
                symbol: types.symbol_of(&s.type_name)?,
                type_name: s.type_name.clone(),
                start: a,
                original: chars[a..b].iter().collect(),
                suggestion: s.payload.clone(),
            })
        })
        .collect()
}

fn mask_value(original: &str, entries: &[MaskEntry]) -> String {
    let chars: Vec<char> = original.chars().collect();
    let mut out = String::new();
    let mut pos = 0;
    for e in entries {
        out.extend(&chars[pos..e.start]);
        out.push(e.symbol);
        pos = e.start + e.original.chars().count();
    }
    out.extend(&chars[pos..]);
    out
}

/// Masks semantic substrings of a column with the given oracle, in batches.
pub fn abstract_column(values: &[String], types: &SemanticTypeList, oracle: &dyn SemanticOracle) -> MaskedColumn {
    let mut col = MaskedColumn::identity(values);
    if values.iter().any(|v| v.chars().any(alphabet::is_mask)) {
        col.warnings.push("values contain reserved mask codepoints; masking skipped".into());
        return col;
    }
    let batch = oracle.max_batch().max(1);
    let mut rejected = 0;
    for (b, chunk) in values.chunks(batch).enumerate() {
        let offset = b * batch;
        let out = match oracle.annotate(chunk, types) {
            Ok(out) if out.len() == chunk.len() => out,
            Ok(out) => {
                col.warnings.push(format!(
                    "oracle returned {} values for a batch of {}; batch left unmasked",
                    out.len(),
                    chunk.len()
                ));
                continue;
            }
            Err(e) => {
                col.warnings.push(format!("oracle failed ({e}); batch left unmasked"));
                continue;
            }
        };
        for (i, annotated) in out.into_iter().enumerate() {
            let row = offset + i;
            match parse_annotation(&values[row], &annotated, types) {
                Some(entries) => {
                    col.masked_values[row] = mask_value(&values[row], &entries);
                    col.alphabet_extension.extend(entries.iter().map(|e| e.symbol));
                    col.mask_table[row] = entries;
                    col.annotated[row] = annotated;
                }
                None => rejected += 1,
            }
        }
    }
    if rejected > 0 {
        col.warnings
            .push(format!("{rejected} oracle outputs did not match their values and were ignored"));
    }

    let nonempty: Vec<&String> = col.masked_values.iter().filter(|v| !v.is_empty()).collect();
    let single_mask = |v: &&String| {
        let mut it = v.chars();
        matches!((it.next(), it.next()), (Some(c), None) if alphabet::is_mask(c))
    };
    if !nonempty.is_empty() && nonempty.iter().all(single_mask) {
        let mut warnings = std::mem::take(&mut col.warnings);
        warnings.push("every value is a single semantic span; masking skipped for this column".into());
        col = MaskedColumn::identity(values);
        col.warnings = warnings;
    }
    col
}

/// The masked values and the mask symbols they use.
pub fn to_pattern_alphabet(column: &MaskedColumn) -> (Vec<String>, BTreeSet<char>) {
    (column.masked_values.clone(), column.alphabet_extension.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ConcretizeMode {
    /// Use the oracle's suggestion.
    #[default]
    Suggest,
    /// Reuse the original substring.
    ReuseOnly,
}

/// Replaces mask symbols in a repaired value. The i-th occurrence of a symbol
/// takes the i-th same-row entry of that symbol; further occurrences take the
/// donor for the symbol (a predicted fill or the column's most frequent one).
pub fn concretize_masks(
    repaired: &str,
    entries: &[MaskEntry],
    mode: ConcretizeMode,
    donors: &HashMap<char, String>,
) -> std::result::Result<String, String> {
    let mut used: HashMap<char, usize> = HashMap::new();
    let mut out = String::with_capacity(repaired.len());
    for c in repaired.chars() {
        if !alphabet::is_mask(c) {
            out.push(c);
            continue;
        }
        let n = used.entry(c).or_default();
        let entry = entries.iter().filter(|e| e.symbol == c).nth(*n);
        *n += 1;
        match (entry, mode) {
            (Some(e), ConcretizeMode::Suggest) => out.push_str(&e.suggestion),
            (Some(e), ConcretizeMode::ReuseOnly) => out.push_str(&e.original),
            (None, _) => match donors.get(&c) {
                Some(d) => out.push_str(d),
                None => return Err(format!("no value available for mask m{}", alphabet::mask_index(c).unwrap() + 1)),
            },
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn types() -> SemanticTypeList {
        SemanticTypeList::default()
    }

    struct Fixed(Vec<&'static str>);

    impl SemanticOracle for Fixed {
        fn annotate(&self, values: &[String], _: &SemanticTypeList) -> Result<Vec<String>> {
            Ok(self.0[..values.len()].iter().map(|s| s.to_string()).collect())
        }
    }

    struct Failing;

    impl SemanticOracle for Failing {
        fn annotate(&self, _: &[String], _: &SemanticTypeList) -> Result<Vec<String>> {
            Err(Error::Oracle("unreachable".into()))
        }
    }

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn default_list_has_twenty_unique_types() {
        let t = types();
        assert_eq!(t.names().len(), 20);
        assert_eq!(t.index_of("country"), Some(1));
        assert!(SemanticTypeList::new(vec!["a".into(), "a".into()]).is_err());
        assert!(SemanticTypeList::new(vec![]).is_err());
        assert_eq!(SemanticTypeList::parse("[\"x\",\"y\"]").unwrap().names().len(), 2);
        assert_eq!(SemanticTypeList::parse("x\n\ny\n").unwrap().names().len(), 2);
    }

    #[test]
    fn annotation_parses_and_aligns() {
        let e = parse_annotation("u.k.-392", "{country(UK)}-392", &types()).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].original, "u.k.");
        assert_eq!(e[0].suggestion, "UK");
        assert_eq!(e[0].start, 0);
        assert!(parse_annotation("u.k.-392", "{country(UK)}-393", &types()).is_none());
        assert_eq!(parse_annotation("a{b", "a{b", &types()).unwrap(), vec![]);
        // unknown type names are literal text
        assert!(parse_annotation("US-1", "{planet(US)}-1", &types()).is_none());
    }

    #[test]
    fn two_spans_in_one_value() {
        let e = parse_annotation("red usa", "{color(red)} {country(US)}", &types()).unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e[1].start, 4);
        assert_eq!(e[1].original, "usa");
    }

    #[test]
    fn masking_replaces_spans_with_symbols() {
        let vals = strings(&["US-123", "u.k.-392", "hello"]);
        let oracle = Fixed(vec!["{country(US)}-123", "{country(UK)}-392", "hello"]);
        let col = abstract_column(&vals, &types(), &oracle);
        let m = types().symbol_of("country").unwrap();
        assert_eq!(col.masked_values, vec![format!("{m}-123"), format!("{m}-392"), "hello".to_string()]);
        assert_eq!(col.alphabet_extension.len(), 1);
        let (masked, ext) = to_pattern_alphabet(&col);
        assert_eq!(masked[0], format!("{m}-123"));
        assert!(ext.contains(&m));
    }

    #[test]
    fn failure_degrades_to_identity() {
        let vals = strings(&["US-1"]);
        let col = abstract_column(&vals, &types(), &Failing);
        assert_eq!(col.masked_values, vals);
        assert_eq!(col.warnings.len(), 1);
    }

    #[test]
    fn malformed_row_left_unmasked() {
        let vals = strings(&["US-1", "UK-2"]);
        let col = abstract_column(&vals, &types(), &Fixed(vec!["{country(US)}-1", "{country(UK)}-3"]));
        assert_ne!(col.masked_values[0], vals[0]);
        assert_eq!(col.masked_values[1], vals[1]);
    }

    #[test]
    fn granularity_guard() {
        let vals = strings(&["Q4-2002", "Q3-2002"]);
        let col = abstract_column(&vals, &types(), &Fixed(vec!["{category(Q4-2002)}", "{category(Q3-2002)}"]));
        assert_eq!(col.masked_values, vals);
        assert!(!col.has_masks());
        assert!(col.warnings.iter().any(|w| w.contains("single semantic span")));
    }

    #[test]
    fn concretization_modes() {
        let m = types().symbol_of("country").unwrap();
        let entries = vec![MaskEntry {
            symbol: m,
            type_name: "country".into(),
            start: 0,
            original: "usa".into(),
            suggestion: "US".into(),
        }];
        let repaired = format!("{m}-837-PRO");
        let none = HashMap::new();
        assert_eq!(
            concretize_masks(&repaired, &entries, ConcretizeMode::Suggest, &none).unwrap(),
            "US-837-PRO"
        );
        assert_eq!(
            concretize_masks(&repaired, &entries, ConcretizeMode::ReuseOnly, &none).unwrap(),
            "usa-837-PRO"
        );
        assert_eq!(concretize_masks("abc", &[], ConcretizeMode::Suggest, &none).unwrap(), "abc");
        let twice = format!("{m}{m}");
        assert!(concretize_masks(&twice, &entries, ConcretizeMode::Suggest, &none).is_err());
        let donors = HashMap::from([(m, "IND".to_string())]);
        assert_eq!(
            concretize_masks(&twice, &entries, ConcretizeMode::Suggest, &donors).unwrap(),
            "USIND"
        );
    }
}
