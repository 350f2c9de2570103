//! The per-column detect-and-repair pipeline.

use std::collections::HashMap;
use std::time::Instant;

use serde::Serialize;

use crate::alphabet;
use crate::concretizer::{
    ConcretizationMode, ConcretizerOptions, FeatureMatrix, LearnedConstraint, PatternConcretizer, TrainingRow, DEFAULT_ALPHA,
};
use crate::detector::{detect_cells, Cell, DetectedError};
use crate::edit::{apply, repair_programs, EditProgram, Emit, DEFAULT_MAX_PROGRAMS};
use crate::profiler::{learn_patterns_with, select_significant, LearnOptions, Pattern, PatternSet};
use crate::ranker::{edit_distance, min_distance, rank, CandidateFeatures, RankingMode, RepairCandidate, Weights};
use crate::semantics::{abstract_column, concretize_masks, ConcretizeMode, MaskedColumn, SemanticOracle, SemanticTypeList};
use crate::table::{Table, DEFAULT_TEXT_THRESHOLD};
use crate::{Error, Result};

pub const DEFAULT_DELTA: f64 = 0.2;
pub const DEFAULT_K: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SemanticMode {
    /// Mask semantic substrings and concretize with the oracle's suggestion.
    #[default]
    Full,
    /// No masking.
    NoAbstraction,
    /// Mask, but concretize with the original substring.
    ReuseOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub delta: f64,
    pub k: usize,
    pub alpha: f64,
    pub weights: Weights,
    pub top_n: usize,
    pub oracle: String,
    pub semantic: SemanticMode,
    pub concretization: ConcretizationMode,
    pub ranking: RankingMode,
    pub seed: u64,
    pub flag_empty: bool,
    pub max_programs: usize,
    pub types: SemanticTypeList,
    /// Minimum text share for a column to be profiled.
    pub text_threshold: f64,
    #[serde(skip)]
    pub timings: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            delta: DEFAULT_DELTA,
            k: DEFAULT_K,
            alpha: DEFAULT_ALPHA,
            weights: Weights::HEURISTIC,
            top_n: 1,
            oracle: "dictionary".into(),
            semantic: SemanticMode::Full,
            concretization: ConcretizationMode::Learned,
            ranking: RankingMode::Heuristic,
            seed: 0,
            flag_empty: false,
            max_programs: DEFAULT_MAX_PROGRAMS,
            types: SemanticTypeList::default(),
            text_threshold: DEFAULT_TEXT_THRESHOLD,
            timings: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let frac = |name: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be in (0, 1], got {v}")))
            }
        };
        frac("delta", self.delta)?;
        frac("alpha", self.alpha)?;
        if !(0.0..=1.0).contains(&self.text_threshold) {
            return Err(Error::Config(format!(
                "text threshold must be in [0, 1], got {}",
                self.text_threshold
            )));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.top_n == 0 {
            return Err(Error::Config("top-n must be at least 1".into()));
        }
        if self.max_programs == 0 {
            return Err(Error::Config("max programs must be at least 1".into()));
        }
        Ok(())
    }

    /// Ranking weights after applying the ranking mode.
    pub fn effective_weights(&self) -> Weights {
        match self.ranking {
            RankingMode::Heuristic => self.weights,
            RankingMode::EditDistance => Weights::EDIT_DISTANCE,
        }
    }

    fn mask_mode(&self) -> ConcretizeMode {
        match self.semantic {
            SemanticMode::ReuseOnly => ConcretizeMode::ReuseOnly,
            _ => ConcretizeMode::Suggest,
        }
    }
}

/// How errors are found in a column.
#[derive(Debug, Clone, Default)]
pub enum Detection {
    /// Values outside the significant patterns.
    #[default]
    Unsupervised,
    /// Patterns come from `successes` only and are all significant; every
    /// row in `failures` is an error.
    Guided { successes: Vec<usize>, failures: Vec<usize> },
}

#[derive(Debug, Clone, Serialize)]
pub struct PatternSummary {
    pub id: String,
    pub pattern: String,
    pub coverage: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Suggestion {
    pub repaired: String,
    pub score: f64,
    pub pattern: String,
    pub program: EditProgram,
    pub features: CandidateFeatures,
}

#[derive(Debug, Clone, Serialize)]
pub struct RowRepair {
    pub row: usize,
    pub original: String,
    pub suggestions: Vec<Suggestion>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Unrepaired {
    pub row: usize,
    pub original: String,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlaggedValue {
    pub row: usize,
    pub value: String,
    pub masked: String,
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct ColumnTimings {
    pub abstraction_ms: f64,
    pub learning_ms: f64,
    pub detection_ms: f64,
    pub repair_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ColumnResult {
    pub column: String,
    pub column_index: usize,
    pub rows: usize,
    pub patterns: Vec<PatternSummary>,
    pub detections: Vec<FlaggedValue>,
    pub repairs: Vec<RowRepair>,
    pub unrepaired: Vec<Unrepaired>,
    pub constraints: Vec<LearnedConstraint>,
    pub fire_rate: f64,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<ColumnTimings>,
    /// Full ranked candidate lists, for callers that need more than top-n.
    #[serde(skip)]
    pub candidates: HashMap<usize, Vec<RepairCandidate>>,
    #[serde(skip)]
    pub pattern_set: Option<PatternSet>,
}

impl ColumnResult {
    /// The best suggestion for each repaired row.
    pub fn top_repairs(&self) -> impl Iterator<Item = (usize, &str)> {
        self.repairs
            .iter()
            .filter_map(|r| r.suggestions.first().map(|s| (r.row, s.repaired.as_str())))
    }
}

/// Stage clock; only read when timings are requested, since `Instant` is
/// unavailable on some targets.
fn clock(enabled: bool) -> Option<Instant> {
    enabled.then(Instant::now)
}

fn ms(since: Option<Instant>) -> f64 {
    since.map_or(0.0, |t| t.elapsed().as_secs_f64() * 1e3)
}

/// Indices of the columns profiled by default: string columns by the
/// configured text threshold.
pub fn string_columns(table: &Table, config: &RunConfig) -> Vec<usize> {
    table
        .columns
        .iter()
        .enumerate()
        .filter(|(_, c)| c.text_fraction().is_some_and(|f| f >= config.text_threshold))
        .map(|(i, _)| i)
        .collect()
}

/// Runs abstraction, learning, detection and repair on one column.
pub fn run_column(table: &Table, column: usize, config: &RunConfig, oracle: &dyn SemanticOracle, detection: &Detection) -> ColumnResult {
    let col = &table.columns[column];
    let mut timings = ColumnTimings::default();

    // Rows taking part, and their text.
    let rows: Vec<usize> = (0..table.row_count)
        .filter(|&r| config.flag_empty || !col.values[r].is_na())
        .collect();
    let values: Vec<String> = rows.iter().map(|&r| col.values[r].raw.clone()).collect();

    let t = clock(config.timings);
    let masked = match config.semantic {
        SemanticMode::NoAbstraction => MaskedColumn::identity(&values),
        _ => abstract_column(&values, &config.types, oracle),
    };
    timings.abstraction_ms = ms(t);
    let mut warnings = masked.warnings.clone();
    let pos_of: HashMap<usize, usize> = rows.iter().enumerate().map(|(i, &r)| (r, i)).collect();

    let t = clock(config.timings);
    let learn = LearnOptions {
        k: config.k,
        types: config.types.clone(),
        ..Default::default()
    };
    let set = match detection {
        Detection::Unsupervised => {
            let patterns = learn_patterns_with(&masked.masked_values, &learn);
            select_significant(patterns, config.delta).expect("delta validated")
        }
        Detection::Guided { successes, .. } => {
            let train: Vec<String> = successes
                .iter()
                .filter_map(|r| pos_of.get(r).map(|&i| masked.masked_values[i].clone()))
                .collect();
            PatternSet::all_significant(learn_patterns_with(&train, &learn))
        }
    };
    timings.learning_ms = ms(t);

    let t = clock(config.timings);
    let errors: Vec<DetectedError> = match detection {
        Detection::Unsupervised => {
            let cells: Vec<Cell<'_>> = rows
                .iter()
                .enumerate()
                .map(|(i, &row)| Cell {
                    row,
                    raw: &values[i],
                    masked: &masked.masked_values[i],
                })
                .collect();
            detect_cells(&col.name, &cells, rows.len(), &set).errors
        }
        Detection::Guided { failures, .. } => failures
            .iter()
            .filter_map(|r| {
                pos_of.get(r).map(|&i| DetectedError {
                    row: *r,
                    raw: values[i].clone(),
                    masked: masked.masked_values[i].clone(),
                })
            })
            .collect(),
    };
    if set.significant.is_empty() {
        warnings.push("no significant pattern learned; nothing detected".into());
    }
    timings.detection_ms = ms(t);

    let t = clock(config.timings);
    let error_rows: std::collections::HashSet<usize> = errors.iter().map(|e| e.row).collect();
    let clean: Vec<usize> = match detection {
        Detection::Unsupervised => (0..rows.len()).filter(|&i| !error_rows.contains(&rows[i])).collect(),
        Detection::Guided { successes, .. } => successes.iter().filter_map(|r| pos_of.get(r).copied()).collect(),
    };
    let reference: Vec<String> = {
        let mut v: Vec<String> = clean.iter().map(|&i| values[i].clone()).collect();
        v.sort();
        v.dedup();
        v
    };
    let features = if errors.is_empty() {
        FeatureMatrix::default()
    } else {
        FeatureMatrix::build(table, Some(column))
    };
    let mut repairer = Repairer {
        config,
        masked: &masked,
        set: &set,
        clean: &clean,
        rows: &rows,
        reference: &reference,
        features: &features,
        concretizers: (0..set.significant.len()).map(|_| None).collect(),
        donors: masked
            .donors()
            .into_iter()
            .map(|(sym, (orig, sugg))| {
                (
                    sym,
                    if config.mask_mode() == ConcretizeMode::ReuseOnly {
                        orig
                    } else {
                        sugg
                    },
                )
            })
            .collect(),
    };
    let mut repairs = Vec::new();
    let mut unrepaired = Vec::new();
    let mut candidates = HashMap::new();
    for e in &errors {
        let i = pos_of[&e.row];
        match repairer.repair(i) {
            Ok(ranked) => {
                repairs.push(RowRepair {
                    row: e.row,
                    original: e.raw.clone(),
                    suggestions: ranked.iter().take(config.top_n).map(|c| suggestion(c, &set)).collect(),
                });
                candidates.insert(e.row, ranked);
            }
            Err(reason) => unrepaired.push(Unrepaired {
                row: e.row,
                original: e.raw.clone(),
                reason,
            }),
        }
    }
    let constraints = repairer.constraints();
    timings.repair_ms = ms(t);

    let type_names = config.types.names();
    ColumnResult {
        column: col.name.clone(),
        column_index: column,
        rows: rows.len(),
        patterns: set
            .all
            .iter()
            .map(|p| PatternSummary {
                id: p.id.to_string(),
                pattern: p.syntax(),
                coverage: p.coverage,
                significant: set.significant.iter().any(|s| s.id == p.id),
            })
            .collect(),
        detections: errors
            .iter()
            .map(|e| FlaggedValue {
                row: e.row,
                value: e.raw.clone(),
                masked: alphabet::render(&e.masked, type_names),
            })
            .collect(),
        repairs,
        unrepaired,
        constraints,
        fire_rate: if rows.is_empty() {
            0.0
        } else {
            errors.len() as f64 / rows.len() as f64
        },
        warnings,
        timings: config.timings.then_some(timings),
        candidates,
        pattern_set: Some(set),
    }
}

fn suggestion(c: &RepairCandidate, set: &PatternSet) -> Suggestion {
    Suggestion {
        repaired: c.repaired.clone(),
        score: c.score,
        pattern: set.all.iter().find(|p| p.id == c.pattern).map_or_else(String::new, Pattern::syntax),
        program: c.program.clone(),
        features: c.features,
    }
}

struct Repairer<'a> {
    config: &'a RunConfig,
    masked: &'a MaskedColumn,
    set: &'a PatternSet,
    /// Positions (into `rows`) of rows that are not errors.
    clean: &'a [usize],
    rows: &'a [usize],
    reference: &'a [String],
    features: &'a FeatureMatrix,
    concretizers: Vec<Option<PatternConcretizer<'a>>>,
    donors: HashMap<char, String>,
}

impl<'a> Repairer<'a> {
    fn ensure_concretizer(&mut self, pi: usize) {
        let options = ConcretizerOptions {
            alpha: self.config.alpha,
            mode: self.config.concretization,
            mask_mode: self.config.mask_mode(),
        };
        let (masked, rows, features) = (self.masked, self.rows, self.features);
        let pattern: &'a Pattern = &self.set.significant[pi];
        let clean = self.clean;
        self.concretizers[pi].get_or_insert_with(|| {
            let training: Vec<TrainingRow<'_>> = clean
                .iter()
                .filter(|&&c| pattern.matches(&masked.masked_values[c]))
                .map(|&c| TrainingRow {
                    row: rows[c],
                    masked: &masked.masked_values[c],
                    masks: &masked.mask_table[c],
                })
                .collect();
            PatternConcretizer::new(pattern, features, &training, options)
        });
    }

    fn constraints(&self) -> Vec<LearnedConstraint> {
        self.concretizers.iter().flatten().flat_map(|c| c.learned()).collect()
    }

    /// Ranked candidates for the value at position `i`.
    fn repair(&mut self, i: usize) -> std::result::Result<Vec<RepairCandidate>, String> {
        let value = &self.masked.masked_values[i];
        let source: Vec<char> = value.chars().collect();
        let row = self.rows[i];
        let mut reasons = Vec::new();
        let mut by_string: HashMap<String, RepairCandidate> = HashMap::new();
        let mut distances: HashMap<String, usize> = HashMap::new();
        let set = self.set;
        for (pi, pattern) in set.significant.iter().enumerate() {
            let (_, programs) = repair_programs(pattern, value, self.config.max_programs);
            if programs.is_empty() {
                reasons.push(format!("{}: no edit program", pattern.syntax()));
                continue;
            }
            self.ensure_concretizer(pi);
            let concretizer = self.concretizers[pi].as_ref().expect("built above");
            for program in &programs {
                let concrete = match concretizer.concretize(program, &source, row) {
                    Ok(c) => c,
                    Err(reason) => {
                        reasons.push(reason);
                        continue;
                    }
                };
                for p in concrete {
                    let repaired_masked = match apply(&p, value) {
                        Ok(s) => s,
                        Err(e) => {
                            reasons.push(e.to_string());
                            continue;
                        }
                    };
                    debug_assert!(pattern.matches(&repaired_masked), "{p} on {value:?}");
                    if !pattern.matches(&repaired_masked) {
                        continue;
                    }
                    let mut donors = self.donors.clone();
                    for a in &p.actions {
                        if let Some(Emit::Mask { symbol, fill: Some(f), .. }) = a.emit() {
                            donors.insert(*symbol, f.clone());
                        }
                    }
                    let repaired = match concretize_masks(&repaired_masked, &self.masked.mask_table[i], self.config.mask_mode(), &donors) {
                        Ok(s) => s,
                        Err(reason) => {
                            reasons.push(reason);
                            continue;
                        }
                    };
                    let original = &self.masked.raw[i];
                    let min_d = *distances
                        .entry(repaired.clone())
                        .or_insert_with(|| min_distance(&repaired, self.reference));
                    let cand = RepairCandidate {
                        row,
                        original: original.clone(),
                        repaired: repaired.clone(),
                        pattern: pattern.id,
                        features: CandidateFeatures {
                            edit_distance: edit_distance(original, &repaired),
                            alnum_edits: p.alnum_edits(&source),
                            min_distance_to_column: min_d,
                            pattern_coverage: pattern.coverage,
                        },
                        program: p,
                        score: 0.0,
                    };
                    let w = self.config.effective_weights();
                    let better = |old: &RepairCandidate| crate::ranker::score(&cand.features, &w) > crate::ranker::score(&old.features, &w);
                    if by_string.get(&repaired).is_none_or(better) {
                        by_string.insert(repaired, cand);
                    }
                }
            }
        }
        if by_string.is_empty() {
            reasons.dedup();
            return Err(if reasons.is_empty() {
                "no significant pattern".to_string()
            } else {
                reasons.join("; ")
            });
        }
        Ok(rank(by_string.into_values().collect(), &self.config.effective_weights()))
    }
}

/// Writes the top suggestion of every repaired row into a copy of the table.
pub fn apply_repairs(table: &Table, results: &[ColumnResult]) -> Table {
    let mut out = table.clone();
    for r in results {
        for (row, value) in r.top_repairs() {
            out.set_cell(r.column_index, row, value);
        }
    }
    out
}
