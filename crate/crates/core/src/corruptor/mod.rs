//! Synthetic noise for benchmarking.
//!
//! Each text cell is corrupted with probability `cell_probability`. A
//! corrupted cell receives between one and four distinct noise operations
//! drawn without replacement from the enabled families; an operation that
//! cannot apply to the current text (say a digit swap on a value with fewer
//! than two different digits) is skipped and the next one drawn.

pub mod synthetic;

use std::collections::{HashMap, HashSet};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::table::{CellKind, Table};
use crate::{Error, Result};

pub const DEFAULT_CELL_PROBABILITY: f64 = 0.2;
pub const DELIMITERS: [char; 6] = ['-', '_', '.', '/', ':', ','];
pub const TYPOS: [(char, char); 6] = [('o', '0'), ('l', '1'), ('e', '3'), ('a', '4'), ('t', '7'), ('s', '5')];

const ALNUM: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
const ATTEMPTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseOp {
    /// Insert, delete or change one character.
    CharEdit,
    /// Insert, delete or change one delimiter.
    Delimiter,
    /// Exchange two different digits.
    DigitSwap,
    /// Shuffle a contiguous run of 2 to 4 characters.
    Shuffle,
    /// Flip the case of one letter.
    Capitalization,
    /// Swap decimal points and commas of a number.
    DecimalComma,
    /// Replace a letter by a look-alike digit.
    VisualTypo,
}

impl NoiseOp {
    pub const ALL: [NoiseOp; 7] = [
        NoiseOp::CharEdit,
        NoiseOp::Delimiter,
        NoiseOp::DigitSwap,
        NoiseOp::Shuffle,
        NoiseOp::Capitalization,
        NoiseOp::DecimalComma,
        NoiseOp::VisualTypo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NoiseOp::CharEdit => "char_edit",
            NoiseOp::Delimiter => "delimiter",
            NoiseOp::DigitSwap => "digit_swap",
            NoiseOp::Shuffle => "shuffle",
            NoiseOp::Capitalization => "capitalization",
            NoiseOp::DecimalComma => "decimal_comma",
            NoiseOp::VisualTypo => "visual_typo",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown noise operation `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub cell_probability: f64,
    /// Relative weights of applying 1, 2, 3 or 4 operations.
    pub op_count_weights: [f64; 4],
    pub seed: u64,
    pub enabled_ops: Vec<NoiseOp>,
    /// Restrict corruption to these columns; all columns when empty.
    #[serde(default)]
    pub columns: Vec<String>,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            cell_probability: DEFAULT_CELL_PROBABILITY,
            op_count_weights: [0.25; 4],
            seed: 0,
            enabled_ops: NoiseOp::ALL.to_vec(),
            columns: Vec::new(),
        }
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.cell_probability) {
            return Err(Error::Config(format!(
                "cell probability must be in [0, 1], got {}",
                self.cell_probability
            )));
        }
        if self.op_count_weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || self.op_count_weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::Config(
                "operation count weights must be non-negative with a positive sum".into(),
            ));
        }
        if self.enabled_ops.is_empty() {
            return Err(Error::Config("no noise operation enabled".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorruptionEntry {
    pub row: usize,
    pub column: String,
    pub original: String,
    pub corrupted: String,
    pub ops: Vec<NoiseOp>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorruptionLog {
    pub seed: u64,
    pub entries: Vec<CorruptionEntry>,
    /// Text cells that were eligible for corruption.
    pub eligible_cells: usize,
}

fn is_delimiter(c: char) -> bool {
    !c.is_alphanumeric() && !c.is_whitespace()
}

fn positions(chars: &[char], f: impl Fn(char) -> bool) -> Vec<usize> {
    chars.iter().enumerate().filter(|(_, c)| f(**c)).map(|(i, _)| i).collect()
}

fn random_alnum(rng: &mut ChaCha8Rng) -> char {
    *ALNUM.choose(rng).expect("non-empty") as char
}

/// Applies one operation; `None` if it cannot apply to `chars`.
pub fn apply_op(op: NoiseOp, chars: &[char], rng: &mut ChaCha8Rng) -> Option<Vec<char>> {
    let mut out = chars.to_vec();
    match op {
        NoiseOp::CharEdit => {
            let kinds: &[u8] = if chars.is_empty() { &[0] } else { &[0, 1, 2] };
            match kinds.choose(rng).copied()? {
                0 => out.insert(rng.random_range(0..=chars.len()), random_alnum(rng)),
                1 => {
                    out.remove(rng.random_range(0..chars.len()));
                }
                _ => {
                    let i = rng.random_range(0..chars.len());
                    let mut c = random_alnum(rng);
                    while c == chars[i] {
                        c = random_alnum(rng);
                    }
                    out[i] = c;
                }
            }
        }
        NoiseOp::Delimiter => {
            let present = positions(chars, is_delimiter);
            let kinds: &[u8] = if present.is_empty() { &[0] } else { &[0, 1, 2] };
            match kinds.choose(rng).copied()? {
                0 => out.insert(rng.random_range(0..=chars.len()), *DELIMITERS.choose(rng)?),
                1 => {
                    out.remove(*present.choose(rng)?);
                }
                _ => {
                    let i = *present.choose(rng)?;
                    let others: Vec<char> = DELIMITERS.iter().copied().filter(|&d| d != chars[i]).collect();
                    out[i] = *others.choose(rng)?;
                }
            }
        }
        NoiseOp::DigitSwap => {
            let digits = positions(chars, |c| c.is_ascii_digit());
            let pairs: Vec<(usize, usize)> = digits
                .iter()
                .enumerate()
                .flat_map(|(a, &i)| digits[a + 1..].iter().map(move |&j| (i, j)))
                .filter(|&(i, j)| chars[i] != chars[j])
                .collect();
            let &(i, j) = pairs.choose(rng)?;
            out.swap(i, j);
        }
        NoiseOp::Shuffle => {
            let windows: Vec<(usize, usize)> = (2..=4usize)
                .flat_map(|len| (0..=chars.len().saturating_sub(len)).map(move |s| (s, len)))
                .filter(|&(s, len)| s + len <= chars.len() && chars[s..s + len].iter().any(|c| *c != chars[s]))
                .collect();
            let &(s, len) = windows.choose(rng)?;
            while out[s..s + len] == chars[s..s + len] {
                out[s..s + len].shuffle(rng);
            }
        }
        NoiseOp::Capitalization => {
            let i = *positions(chars, |c| c.is_ascii_alphabetic()).choose(rng)?;
            let c = chars[i];
            out[i] = if c.is_ascii_uppercase() {
                c.to_ascii_lowercase()
            } else {
                c.to_ascii_uppercase()
            };
        }
        NoiseOp::DecimalComma => {
            let numeric = |i: usize| (i > 0 && chars[i - 1].is_ascii_digit()) || chars.get(i + 1).is_some_and(|c| c.is_ascii_digit());
            let marks = positions(chars, |c| c == '.' || c == ',');
            if !marks.iter().any(|&i| numeric(i)) {
                return None;
            }
            for i in marks {
                out[i] = if chars[i] == '.' { ',' } else { '.' };
            }
        }
        NoiseOp::VisualTypo => {
            let i = *positions(chars, |c| TYPOS.iter().any(|(k, _)| *k == c)).choose(rng)?;
            out[i] = TYPOS.iter().find(|(k, _)| *k == chars[i])?.1;
        }
    }
    Some(out)
}

/// Corrupts one value: draws an operation count and applies that many
/// distinct applicable operations. Returns `None` if the value could not be
/// changed.
pub fn corrupt_value(value: &str, spec: &NoiseSpec, counts: &WeightedIndex<f64>, rng: &mut ChaCha8Rng) -> Option<(String, Vec<NoiseOp>)> {
    let original: Vec<char> = value.chars().collect();
    for _ in 0..ATTEMPTS {
        let n = counts.sample(rng) + 1;
        let mut ops = spec.enabled_ops.clone();
        ops.shuffle(rng);
        let mut cur = original.clone();
        let mut applied = Vec::new();
        for op in ops {
            if applied.len() == n {
                break;
            }
            if let Some(next) = apply_op(op, &cur, rng) {
                cur = next;
                applied.push(op);
            }
        }
        if cur != original {
            return Some((cur.into_iter().collect(), applied));
        }
    }
    None
}

/// Corrupts text cells of a table. Deterministic for a given seed.
pub fn corrupt(table: &Table, spec: &NoiseSpec) -> Result<(Table, CorruptionLog)> {
    spec.validate()?;
    for c in &spec.columns {
        if table.column_index(c).is_none() {
            return Err(Error::Config(format!("unknown column `{c}`")));
        }
    }
    let counts = WeightedIndex::new(spec.op_count_weights).map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = table.clone();
    let mut log = CorruptionLog {
        seed: spec.seed,
        ..Default::default()
    };
    for (ci, col) in table.columns.iter().enumerate() {
        if !spec.columns.is_empty() && !spec.columns.contains(&col.name) {
            continue;
        }
        for (row, cell) in col.values.iter().enumerate() {
            if cell.kind != CellKind::Text {
                continue;
            }
            log.eligible_cells += 1;
            if !rng.random_bool(spec.cell_probability) {
                continue;
            }
            if let Some((corrupted, ops)) = corrupt_value(&cell.raw, spec, &counts, &mut rng) {
                out.set_cell(ci, row, &corrupted);
                log.entries.push(CorruptionEntry {
                    row,
                    column: col.name.clone(),
                    original: cell.raw.clone(),
                    corrupted,
                    ops,
                });
            }
        }
    }
    Ok((out, log))
}

/// Undoes a corruption log.
pub fn restore(table: &Table, log: &CorruptionLog) -> Result<Table> {
    let mut out = table.clone();
    for e in &log.entries {
        let ci = table
            .column_index(&e.column)
            .ok_or_else(|| Error::Config(format!("log references unknown column `{}`", e.column)))?;
        out.set_cell(ci, e.row, &e.original);
    }
    Ok(out)
}

/// A suggested value for one cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellRepair {
    pub column: String,
    pub row: usize,
    pub repaired: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecallScore {
    pub corrupted: usize,
    pub repairs: usize,
    pub reverted: usize,
    pub recall: f64,
    /// Correct repairs over all repairs. Repairs of cells outside the log
    /// count as wrong even if they fix a pre-existing error.
    pub precision_lower_bound: f64,
    pub f1: f64,
}

pub fn score_recall(log: &CorruptionLog, repairs: &[CellRepair]) -> RecallScore {
    let truth: HashMap<(&str, usize), &str> = log
        .entries
        .iter()
        .map(|e| ((e.column.as_str(), e.row), e.original.as_str()))
        .collect();
    let mut seen = HashSet::new();
    let mut reverted = 0;
    let mut total = 0;
    for r in repairs {
        if !seen.insert((r.column.as_str(), r.row)) {
            continue;
        }
        total += 1;
        if truth.get(&(r.column.as_str(), r.row)) == Some(&r.repaired.as_str()) {
            reverted += 1;
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let recall = ratio(reverted, log.entries.len());
    let precision = ratio(reverted, total);
    let f1 = if recall + precision == 0.0 {
        0.0
    } else {
        2.0 * recall * precision / (recall + precision)
    };
    RecallScore {
        corrupted: log.entries.len(),
        repairs: total,
        reverted,
        recall,
        precision_lower_bound: precision,
        f1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::Column;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    fn chars(s: &str) -> Vec<char> {
        s.chars().collect()
    }

    fn text(v: Vec<char>) -> String {
        v.into_iter().collect()
    }

    #[test]
    fn typo_map() {
        let mut r = rng();
        let mut seen = HashSet::new();
        for _ in 0..200 {
            seen.insert(text(apply_op(NoiseOp::VisualTypo, &chars("lost"), &mut r).unwrap()));
        }
        let expected: HashSet<String> = ["1ost", "l0st", "lo5t", "los7"].iter().map(|s| s.to_string()).collect();
        assert_eq!(seen, expected);
        assert!(apply_op(NoiseOp::VisualTypo, &chars("XYZ"), &mut r).is_none());
    }

    #[test]
    fn inapplicable_ops() {
        let mut r = rng();
        assert!(apply_op(NoiseOp::DigitSwap, &chars("a1b1"), &mut r).is_none());
        assert!(apply_op(NoiseOp::Shuffle, &chars("aaaa"), &mut r).is_none());
        assert!(apply_op(NoiseOp::Capitalization, &chars("123"), &mut r).is_none());
        assert!(apply_op(NoiseOp::DecimalComma, &chars("a.b"), &mut r).is_none());
        assert_eq!(text(apply_op(NoiseOp::DecimalComma, &chars("1,234.5"), &mut r).unwrap()), "1.234,5");
        assert_eq!(text(apply_op(NoiseOp::DigitSwap, &chars("x12"), &mut r).unwrap()), "x21");
    }

    #[test]
    fn ops_change_the_value() {
        let mut r = rng();
        for op in NoiseOp::ALL {
            for _ in 0..50 {
                if let Some(out) = apply_op(op, &chars("Ab-12.5,z"), &mut r) {
                    assert_ne!(text(out), "Ab-12.5,z", "{op:?}");
                }
            }
        }
    }

    fn sample_table() -> Table {
        let vals: Vec<String> = (0..500).map(|i| format!("ID-{i:04}-x")).collect();
        let nums: Vec<String> = (0..500).map(|i| i.to_string()).collect();
        Table::new("t", vec![Column::from_strs("id", &vals), Column::from_strs("n", &nums)]).unwrap()
    }

    #[test]
    fn zero_rate_is_identity() {
        let t = sample_table();
        let spec = NoiseSpec {
            cell_probability: 0.0,
            ..Default::default()
        };
        let (out, log) = corrupt(&t, &spec).unwrap();
        assert_eq!(out, t);
        assert!(log.entries.is_empty());
    }

    #[test]
    fn deterministic_and_reversible() {
        let t = sample_table();
        let spec = NoiseSpec {
            seed: 42,
            ..Default::default()
        };
        let (a, la) = corrupt(&t, &spec).unwrap();
        let (b, lb) = corrupt(&t, &spec).unwrap();
        assert_eq!(a.to_csv_string(), b.to_csv_string());
        assert_eq!(la, lb);
        assert!(!la.entries.is_empty());
        assert!(la.entries.iter().all(|e| e.column == "id"), "numeric cells are never touched");
        assert_eq!(restore(&a, &la).unwrap(), t);
    }

    #[test]
    fn recall_arithmetic() {
        let entry = |row: usize| CorruptionEntry {
            row,
            column: "c".into(),
            original: format!("v{row}"),
            corrupted: "x".into(),
            ops: vec![NoiseOp::CharEdit],
        };
        let log = CorruptionLog {
            seed: 0,
            entries: (0..4).map(entry).collect(),
            eligible_cells: 10,
        };
        let fix = |row: usize, v: &str| CellRepair {
            column: "c".into(),
            row,
            repaired: v.into(),
        };
        let s = score_recall(&log, &[fix(0, "v0"), fix(1, "v1"), fix(2, "v2"), fix(7, "zz")]);
        assert_eq!(s.recall, 0.75);
        assert_eq!(s.precision_lower_bound, 0.75);
        assert_eq!(score_recall(&log, &[]).recall, 0.0);
        let all: Vec<CellRepair> = (0..4).map(|r| fix(r, &format!("v{r}"))).collect();
        assert_eq!(score_recall(&log, &all).recall, 1.0);
    }
}
