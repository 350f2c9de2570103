//! Resolution of abstract emits into concrete text.
//!
//! Every class, disjunction and mask occurrence of an unrolled pattern is a
//! slot. Rows whose value already matches the pattern show which concrete
//! symbol each slot took; a small decision tree over row predicates learns
//! to predict it ([`tree::learn_tree`]). Slots without an accurate tree fall
//! back to the most frequent symbols observed there.

pub mod features;
pub mod tree;

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use serde::Serialize;

pub use features::{Bitset, Constant, FeatureMatrix, Predicate, Template};
pub use tree::{learn_tree, ConstraintTree, TrainingExample, TreeNode};

use crate::edit::nfa::Edge;
use crate::edit::{match_path, unroll, EditAction, EditProgram, Emit, Label, SlotKey, UnrolledDag};
use crate::profiler::{CharClass, Pattern, PatternNode};
use crate::semantics::{ConcretizeMode, MaskEntry};

pub const DEFAULT_ALPHA: f64 = 0.8;
/// Symbols enumerated for a slot without a tree.
pub const FALLBACK_TOP: usize = 3;
/// Most concrete programs produced from one abstract program.
pub const MAX_CANDIDATES: usize = 27;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConcretizationMode {
    /// Decision trees, with frequency fallback.
    #[default]
    Learned,
    /// Frequency fallback only.
    FrequencyOnly,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SlotKind {
    Class(CharClass),
    Disjunction(Vec<String>),
    Mask { symbol: char, name: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slot {
    pub key: SlotKey,
    pub kind: SlotKind,
}

fn nodes(root: &PatternNode) -> HashMap<usize, &PatternNode> {
    let mut map = HashMap::new();
    root.walk(&mut |id, n| {
        map.insert(id, n);
    });
    map
}

fn slot_key(e: &Edge) -> SlotKey {
    SlotKey {
        node: e.origin.node,
        copy: e.origin.copy.clone(),
    }
}

fn slot_kind(e: &Edge, nodes: &HashMap<usize, &PatternNode>) -> Option<SlotKind> {
    match (e.label, nodes.get(&e.origin.node)) {
        (Label::Class(c), _) => Some(SlotKind::Class(c)),
        (_, Some(PatternNode::Disjunction(alts))) => Some(SlotKind::Disjunction(alts.clone())),
        (_, Some(PatternNode::Mask(m))) => Some(SlotKind::Mask {
            symbol: m.symbol,
            name: m.name.clone(),
        }),
        _ => None,
    }
}

/// The slots of an unrolled pattern, ordered by key. A slot's key depends
/// only on the pattern node and unroll copy, so it is the same in every
/// row's DAG.
pub fn extract_slots(pattern: &Pattern, dag: &UnrolledDag) -> Vec<Slot> {
    let nodes = nodes(&pattern.root);
    let mut slots: BTreeMap<SlotKey, SlotKind> = BTreeMap::new();
    for e in &dag.graph.edges {
        if let Some(kind) = slot_kind(e, &nodes) {
            slots.entry(slot_key(e)).or_insert(kind);
        }
    }
    slots.into_iter().map(|(key, kind)| Slot { key, kind }).collect()
}

/// A non-error row used for training.
#[derive(Debug, Clone, Copy)]
pub struct TrainingRow<'a> {
    pub row: usize,
    /// The value in the pattern alphabet (masks applied).
    pub masked: &'a str,
    pub masks: &'a [MaskEntry],
}

/// The concrete label each slot takes in a matching value.
pub fn slot_labels(pattern: &Pattern, value: &TrainingRow<'_>, mask_mode: ConcretizeMode) -> Option<Vec<(SlotKey, String)>> {
    let chars: Vec<char> = value.masked.chars().collect();
    let dag = unroll(pattern.nfa(), chars.len());
    let path = match_path(&dag, value.masked)?;
    let nodes = nodes(&pattern.root);
    let mut out: Vec<(SlotKey, String)> = Vec::new();
    let mut seen: HashMap<char, usize> = HashMap::new();
    for (i, &ei) in path.iter().enumerate() {
        let e = &dag.graph.edges[ei];
        let label = match slot_kind(e, &nodes) {
            None => continue,
            Some(SlotKind::Class(_)) => chars[i].to_string(),
            Some(SlotKind::Disjunction(alts)) => match e.origin.alt {
                Some((a, 0)) => alts[a as usize].clone(),
                _ => continue,
            },
            Some(SlotKind::Mask { symbol, .. }) => {
                let n = seen.entry(symbol).or_default();
                let entry = value.masks.iter().filter(|m| m.symbol == symbol).nth(*n);
                *n += 1;
                match (entry, mask_mode) {
                    (Some(m), ConcretizeMode::Suggest) => m.suggestion.clone(),
                    (Some(m), ConcretizeMode::ReuseOnly) => m.original.clone(),
                    (None, _) => continue,
                }
            }
        };
        out.push((slot_key(e), label));
    }
    Some(out)
}

#[derive(Debug, Clone, Copy)]
pub struct ConcretizerOptions {
    pub alpha: f64,
    pub mode: ConcretizationMode,
    pub mask_mode: ConcretizeMode,
}

impl Default for ConcretizerOptions {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            mode: ConcretizationMode::Learned,
            mask_mode: ConcretizeMode::Suggest,
        }
    }
}

/// A learned tree together with the slot it predicts.
#[derive(Debug, Clone, Serialize)]
pub struct LearnedConstraint {
    pub pattern: String,
    pub slot: String,
    pub tree: ConstraintTree,
}

/// Concretizes the programs of one pattern. Trees are learned the first time
/// a slot is needed.
pub struct PatternConcretizer<'a> {
    pattern: &'a Pattern,
    features: &'a FeatureMatrix,
    examples: BTreeMap<SlotKey, Vec<TrainingExample>>,
    options: ConcretizerOptions,
    trees: Mutex<HashMap<SlotKey, Option<Arc<ConstraintTree>>>>,
}

impl<'a> PatternConcretizer<'a> {
    pub fn new(pattern: &'a Pattern, features: &'a FeatureMatrix, rows: &[TrainingRow<'_>], options: ConcretizerOptions) -> Self {
        let mut examples: BTreeMap<SlotKey, Vec<TrainingExample>> = BTreeMap::new();
        for r in rows {
            for (key, label) in slot_labels(pattern, r, options.mask_mode).unwrap_or_default() {
                examples.entry(key).or_default().push(TrainingExample { row: r.row, label });
            }
        }
        Self {
            pattern,
            features,
            examples,
            options,
            trees: Mutex::new(HashMap::new()),
        }
    }

    pub fn examples(&self, slot: &SlotKey) -> &[TrainingExample] {
        self.resolve(slot).map_or(&[], |k| &self.examples[k])
    }

    /// The slot whose examples stand in for `slot`: itself, or for an
    /// unseen repetition the last repetition seen in training.
    fn resolve(&self, slot: &SlotKey) -> Option<&SlotKey> {
        if let Some((k, _)) = self.examples.get_key_value(slot) {
            return Some(k);
        }
        self.examples
            .keys()
            .filter(|k| k.node == slot.node && k.copy.len() == slot.copy.len())
            .max()
    }

    pub fn tree(&self, slot: &SlotKey) -> Option<Arc<ConstraintTree>> {
        if self.options.mode == ConcretizationMode::FrequencyOnly {
            return None;
        }
        let key = self.resolve(slot)?;
        let mut cache = self.trees.lock().expect("tree cache poisoned");
        cache
            .entry(key.clone())
            .or_insert_with(|| learn_tree(self.features, &self.examples[key], self.options.alpha).map(Arc::new))
            .clone()
    }

    /// Trees learned so far, by slot.
    pub fn learned(&self) -> Vec<LearnedConstraint> {
        let cache = self.trees.lock().expect("tree cache poisoned");
        let mut out: Vec<(SlotKey, Arc<ConstraintTree>)> = cache
            .iter()
            .filter_map(|(k, t)| t.as_ref().map(|t| (k.clone(), t.clone())))
            .collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out.into_iter()
            .map(|(k, t)| LearnedConstraint {
                pattern: self.pattern.syntax(),
                slot: k.to_string(),
                tree: (*t).clone(),
            })
            .collect()
    }

    /// Most frequent labels at a slot accepted by `admit`, best first.
    fn frequent(&self, slot: &SlotKey, admit: impl Fn(&str) -> bool, n: usize) -> Vec<String> {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for e in self.examples(slot) {
            if admit(&e.label) {
                *counts.entry(&e.label).or_default() += 1;
            }
        }
        let mut v: Vec<(&str, usize)> = counts.into_iter().collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        v.into_iter().take(n).map(|(s, _)| s.to_string()).collect()
    }

    fn predicted(&self, emit: &Emit, row: usize) -> Option<String> {
        let tree = self.tree(emit.slot()?)?;
        let p = tree.predict(self.features, row);
        admissible(emit, p).then(|| p.to_string())
    }

    /// An admissible value that is a near-copy of the replaced text.
    fn near(&self, emit: &Emit, replaced: &str) -> Option<String> {
        if replaced.is_empty() {
            return None;
        }
        match emit {
            Emit::Class { .. } => {
                let mut cs = replaced.chars();
                let (Some(c), None) = (cs.next(), cs.next()) else { return None };
                look_alikes(c).into_iter().map(String::from).find(|s| admissible(emit, s))
            }
            Emit::Disjunction { alternatives, .. } => alternatives.iter().find(|a| a.to_lowercase() == replaced.to_lowercase()).cloned(),
            _ => None,
        }
    }

    fn choices(&self, emit: &Emit, row: usize) -> Vec<String> {
        let admit = |s: &str| admissible(emit, s);
        let Some(slot) = emit.slot() else {
            return Vec::new();
        };
        if let Some(tree) = self.tree(slot) {
            let p = tree.predict(self.features, row);
            if admit(p) {
                return vec![p.to_string()];
            }
        }
        let n = if matches!(emit, Emit::Mask { .. }) { 1 } else { FALLBACK_TOP };
        self.frequent(slot, admit, n)
    }

    /// Every concrete program for `program` at `row`, best guess first, at
    /// most [`MAX_CANDIDATES`]. Mask emits get a `fill` when one can be
    /// predicted. Fails when an abstract slot has no candidate symbol.
    ///
    /// Without a learned constraint, a substitution whose replaced symbol
    /// differs from an admissible one only by case or by a look-alike digit
    /// (`0`/`o`, `1`/`l`, ...) keeps that symbol, and a rewritten
    /// disjunction keeps the alternative equal to the consumed text up to
    /// case.
    pub fn concretize(&self, program: &EditProgram, source: &[char], row: usize) -> Result<Vec<EditProgram>, String> {
        let mut positions = Vec::new();
        let mut options: Vec<Vec<String>> = Vec::new();
        let mut base = program.clone();
        let mut at = 0;
        for (i, a) in program.actions.iter().enumerate() {
            let start = at;
            at += match a {
                EditAction::Match | EditAction::Delete | EditAction::Substitute(_) => 1,
                EditAction::Choose { consumed, .. } => *consumed,
                EditAction::Insert(_) => 0,
            };
            let Some(emit) = a.emit() else { continue };
            match emit {
                Emit::Class { .. } | Emit::Disjunction { .. } => {
                    let replaced: String = source.get(start..at).map_or_else(String::new, |s| s.iter().collect());
                    let c = match self.near(emit, &replaced) {
                        Some(near) if self.predicted(emit, row).is_none() => vec![near],
                        _ => self.choices(emit, row),
                    };
                    if c.is_empty() {
                        return Err(format!(
                            "no concrete value observed for slot {} ({emit})",
                            emit.slot().expect("abstract emits carry a slot")
                        ));
                    }
                    positions.push(i);
                    options.push(c);
                }
                Emit::Mask { .. } => {
                    let fill = self.choices(emit, row).into_iter().next();
                    if let Some(Emit::Mask { fill: f, .. }) = base.actions[i].emit_mut() {
                        *f = fill;
                    }
                }
                Emit::Char(_) | Emit::Text(_) => {}
            }
        }
        let mut out = Vec::new();
        let mut idx = vec![0usize; options.len()];
        loop {
            let mut p = base.clone();
            for (k, &i) in positions.iter().enumerate() {
                let chosen = &options[k][idx[k]];
                let action = &mut p.actions[i];
                debug_assert!(action.emit().is_some_and(|e| admissible(e, chosen)));
                let concrete = match action.emit() {
                    Some(Emit::Class { .. }) => Emit::Char(chosen.chars().next().expect("class label is one char")),
                    _ => Emit::Text(chosen.clone()),
                };
                *action.emit_mut().expect("position holds an emit") = concrete;
            }
            out.push(p);
            if out.len() >= MAX_CANDIDATES || !advance(&mut idx, &options) {
                break;
            }
        }
        Ok(out)
    }
}

/// Symbols a typist or a scan could have turned into `c`.
fn look_alikes(c: char) -> Vec<char> {
    let mut out = Vec::new();
    if c.is_ascii_uppercase() {
        out.push(c.to_ascii_lowercase());
    } else if c.is_ascii_lowercase() {
        out.push(c.to_ascii_uppercase());
    }
    let letter = match c {
        '0' => Some('o'),
        '1' => Some('l'),
        '3' => Some('e'),
        '4' => Some('a'),
        '5' => Some('s'),
        '7' => Some('t'),
        _ => None,
    };
    if let Some(l) = letter {
        out.extend([l, l.to_ascii_uppercase()]);
    }
    out
}

/// Odometer over choice lists; the last position varies fastest.
fn advance(idx: &mut [usize], options: &[Vec<String>]) -> bool {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < options[k].len() {
            return true;
        }
        idx[k] = 0;
    }
    false
}

/// Whether `label` is a legal concrete value for `emit`.
pub fn admissible(emit: &Emit, label: &str) -> bool {
    match emit {
        Emit::Class { class, .. } => {
            let mut cs = label.chars();
            matches!((cs.next(), cs.next()), (Some(c), None) if class.contains(c))
        }
        Emit::Disjunction { alternatives, .. } => alternatives.iter().any(|a| a == label),
        Emit::Mask { .. } => !label.is_empty(),
        Emit::Char(_) | Emit::Text(_) => false,
    }
}

/// Whether the program still has an emit needing concretization.
pub fn needs_concretization(program: &EditProgram) -> bool {
    program
        .actions
        .iter()
        .any(|a| matches!(a, EditAction::Insert(e) | EditAction::Substitute(e) | EditAction::Choose { emit: e, .. } if e.is_abstract()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edit::{apply, repair_programs};
    use crate::table::{Column, Table};

    fn rows<'a>(values: &'a [&'a str]) -> Vec<TrainingRow<'a>> {
        values
            .iter()
            .enumerate()
            .map(|(row, v)| TrainingRow {
                row,
                masked: v,
                masks: &[],
            })
            .collect()
    }

    #[test]
    fn repeated_group_slots() {
        let p = Pattern::parse("(A[0-9].)+").unwrap();
        let dag = unroll(p.nfa(), 6);
        let classes: Vec<_> = extract_slots(&p, &dag)
            .into_iter()
            .filter(|s| matches!(s.kind, SlotKind::Class(_)))
            .collect();
        assert_eq!(classes.len(), 2);
        assert_ne!(classes[0].key, classes[1].key);
        assert_eq!(classes[0].key.node, classes[1].key.node);
    }

    #[test]
    fn literal_pattern_has_no_slots() {
        let p = Pattern::parse("abc").unwrap();
        assert!(extract_slots(&p, &unroll(p.nfa(), 3)).is_empty());
    }

    #[test]
    fn disjunction_is_one_slot() {
        let p = Pattern::parse("X-[0-9]-(JUN|PRO)").unwrap();
        let slots = extract_slots(&p, &unroll(p.nfa(), 7));
        let dis: Vec<_> = slots.iter().filter(|s| matches!(s.kind, SlotKind::Disjunction(_))).collect();
        assert_eq!(dis.len(), 1);
    }

    #[test]
    fn frequency_fallback_orders_by_count() {
        // Second-position digits over matching rows: 2 three times, 5 once.
        let values = ["A2.A3.", "A2.A7.", "A2.", "A5.A2.A5."];
        let t = Table::new("t", vec![Column::from_strs("c", &values)]).unwrap();
        let fm = FeatureMatrix::build(&t, Some(0));
        let p = Pattern::parse("(A[0-9].)+").unwrap();
        let opts = ConcretizerOptions {
            mode: ConcretizationMode::FrequencyOnly,
            ..Default::default()
        };
        let c = PatternConcretizer::new(&p, &fm, &rows(&values), opts);
        let (_, programs) = repair_programs(&p, "AAA3", 10);
        let target = programs
            .iter()
            .find(|p| p.to_string().starts_with("[M, S([0-9])"))
            .expect("substitute program");
        let concrete = c.concretize(target, &"AAA3".chars().collect::<Vec<_>>(), 4).unwrap();
        let outs: Vec<String> = concrete.iter().map(|p| apply(p, "AAA3").unwrap()).collect();
        assert!(outs[0].starts_with("A2"), "{outs:?}");
        assert!(outs.iter().any(|o| o.starts_with("A5")), "{outs:?}");
        for o in &outs {
            assert!(p.matches(o), "{o}");
        }
    }

    #[test]
    fn category_tree_picks_suffix() {
        let ids = [
            "IND-674-PRO",
            "USA-120-JUN",
            "GBR-332-PRO",
            "FRA-101-JUN",
            "CAN-550-PRO",
            "GER-871-JUN",
            "usa_837",
        ];
        let cat = [
            "Professional",
            "Junior",
            "Professional",
            "Junior",
            "Professional",
            "Junior",
            "Professional",
        ];
        let t = Table::new("t", vec![Column::from_strs("Player ID", &ids), Column::from_strs("Category", &cat)]).unwrap();
        let fm = FeatureMatrix::build(&t, Some(0));
        let p = Pattern::parse("[A-Z][A-Z][A-Z]-[0-9][0-9][0-9]-(JUN|PRO)").unwrap();
        let c = PatternConcretizer::new(&p, &fm, &rows(&ids[..6]), ConcretizerOptions::default());
        let (_, programs) = repair_programs(&p, "USA-837", 10);
        let prog = programs.iter().find(|p| needs_concretization(p)).unwrap();
        let out = c.concretize(prog, &"USA-837".chars().collect::<Vec<_>>(), 6).unwrap();
        assert_eq!(apply(&out[0], "USA-837").unwrap(), "USA-837-PRO");
        let learned = c.learned();
        assert_eq!(learned.len(), 1);
        let json = serde_json::to_value(&learned[0].tree.root).unwrap();
        assert!(json["predicate"].as_str().unwrap().contains("Category"), "{json}");
        assert!(json["true_branch"]["leaf"].is_string());
    }

    #[test]
    fn slot_without_symbols_is_an_error() {
        let p = Pattern::parse("a[0-9]").unwrap();
        let t = Table::new("t", vec![Column::from_strs("c", &["x", "y"])]).unwrap();
        let fm = FeatureMatrix::build(&t, None);
        let c = PatternConcretizer::new(&p, &fm, &[], ConcretizerOptions::default());
        let (_, programs) = repair_programs(&p, "a", 10);
        assert!(c.concretize(&programs[0], &['a'], 0).is_err());
    }
}
