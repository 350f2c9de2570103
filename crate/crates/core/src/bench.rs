//! Recall benchmarks over corrupted tables and the ablation switches.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::concretizer::ConcretizationMode;
use crate::corruptor::{score_recall, CellRepair, CorruptionLog, RecallScore};
use crate::pipeline::{run_column, string_columns, Detection, RunConfig, SemanticMode};
use crate::ranker::RankingMode;
use crate::semantics::SemanticOracle;
use crate::table::Table;
use crate::{Error, Result};

/// The full system and the variants with one component disabled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    Full,
    NoSemanticAbstraction,
    LimitedSemanticConcretization,
    NoLearnedConcretization,
    EditDistanceRanking,
}

impl Ablation {
    pub const ALL: [Ablation; 5] = [
        Ablation::Full,
        Ablation::NoSemanticAbstraction,
        Ablation::LimitedSemanticConcretization,
        Ablation::NoLearnedConcretization,
        Ablation::EditDistanceRanking,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Ablation::Full => "full",
            Ablation::NoSemanticAbstraction => "no_semantic_abstraction",
            Ablation::LimitedSemanticConcretization => "limited_semantic_concretization",
            Ablation::NoLearnedConcretization => "no_learned_concretization",
            Ablation::EditDistanceRanking => "edit_distance_ranking",
        }
    }

    /// `base` with this component switched off.
    pub fn apply(self, base: &RunConfig) -> RunConfig {
        let mut c = base.clone();
        match self {
            Ablation::Full => {}
            Ablation::NoSemanticAbstraction => c.semantic = SemanticMode::NoAbstraction,
            Ablation::LimitedSemanticConcretization => c.semantic = SemanticMode::ReuseOnly,
            Ablation::NoLearnedConcretization => c.concretization = ConcretizationMode::FrequencyOnly,
            Ablation::EditDistanceRanking => c.ranking = RankingMode::EditDistance,
        }
        c
    }
}

impl fmt::Display for Ablation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Ablation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_");
        Ablation::ALL
            .into_iter()
            .find(|a| a.name() == norm)
            .ok_or_else(|| Error::Config(format!("unknown ablation `{s}`")))
    }
}

/// One dirty table with its ground truth.
#[derive(Debug, Clone)]
pub struct BenchCase {
    pub table: Table,
    pub log: CorruptionLog,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub mode: String,
    pub tables: usize,
    pub columns: usize,
    pub cells: usize,
    pub fire_rate: f64,
    pub score: RecallScore,
}

/// Repairs every string column of every case and scores the top repairs
/// against the logs.
pub fn run_bench(mode: &str, cases: &[BenchCase], config: &RunConfig, oracle: &dyn SemanticOracle) -> Result<BenchRow> {
    if cases.is_empty() {
        return Err(Error::Corpus("empty benchmark corpus".into()));
    }
    config.validate()?;
    let mut repairs = Vec::new();
    let mut merged = CorruptionLog::default();
    let mut columns = 0;
    let mut cells = 0;
    let mut fire = 0.0;
    for (ti, case) in cases.iter().enumerate() {
        // Column names are only unique within a table.
        let key = |col: &str| format!("{ti}\u{1f}{col}");
        for ci in string_columns(&case.table, config) {
            let r = run_column(&case.table, ci, config, oracle, &Detection::Unsupervised);
            columns += 1;
            cells += r.rows;
            fire += r.fire_rate;
            repairs.extend(r.top_repairs().map(|(row, v)| CellRepair {
                column: key(&r.column),
                row,
                repaired: v.to_string(),
            }));
        }
        merged.eligible_cells += case.log.eligible_cells;
        merged.entries.extend(case.log.entries.iter().cloned().map(|mut e| {
            e.column = key(&e.column);
            e
        }));
    }
    Ok(BenchRow {
        mode: mode.to_string(),
        tables: cases.len(),
        columns,
        cells,
        fire_rate: if columns == 0 { 0.0 } else { fire / columns as f64 },
        score: score_recall(&merged, &repairs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corruptor::{corrupt, NoiseSpec};
    use crate::semantics::DictionaryOracle;
    use crate::table::Column;

    #[test]
    fn ablation_names_round_trip() {
        for a in Ablation::ALL {
            assert_eq!(a.name().parse::<Ablation>().unwrap(), a);
        }
        assert_eq!("edit-distance-ranking".parse::<Ablation>().unwrap(), Ablation::EditDistanceRanking);
        assert!("nope".parse::<Ablation>().is_err());
        let c = Ablation::NoSemanticAbstraction.apply(&RunConfig::default());
        assert_eq!(c.semantic, SemanticMode::NoAbstraction);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(run_bench("full", &[], &RunConfig::default(), &DictionaryOracle::bundled()).is_err());
    }

    #[test]
    fn clean_tables_score_zero_recall_and_no_corruptions() {
        let values: Vec<String> = (0..30).map(|i| format!("C-{i:02}")).collect();
        let table = Table::new("t", vec![Column::from_strs("c", &values)]).unwrap();
        let spec = NoiseSpec {
            cell_probability: 0.0,
            ..Default::default()
        };
        let (dirty, log) = corrupt(&table, &spec).unwrap();
        let row = run_bench(
            "full",
            &[BenchCase { table: dirty, log }],
            &RunConfig::default(),
            &DictionaryOracle::bundled(),
        )
        .unwrap();
        assert_eq!(row.score.corrupted, 0);
        assert_eq!(row.columns, 1);
        assert_eq!(row.cells, 30);
    }
}
