use std::collections::HashMap;

use proptest::prelude::*;

use strfix::corruptor::{corrupt, restore, NoiseSpec};
use strfix::detector::detect;
use strfix::edit::EditProgram;
use strfix::profiler::{learn_patterns, select_significant, PatternId};
use strfix::ranker::{rank, CandidateFeatures, RepairCandidate, Weights};
use strfix::semantics::{abstract_column, concretize_masks, ConcretizeMode, DictionaryOracle, SemanticTypeList};
use strfix::table::{load_table_str, Column, Table};

fn candidate(repaired: String, f: (usize, usize, usize, u8)) -> RepairCandidate {
    RepairCandidate {
        row: 0,
        original: "x".into(),
        repaired,
        pattern: PatternId(0),
        program: EditProgram::new(vec![], PatternId(0)),
        features: CandidateFeatures {
            edit_distance: f.0,
            alnum_edits: f.1,
            min_distance_to_column: f.2,
            pattern_coverage: f.3 as f64 / 100.0,
        },
        score: 0.0,
    }
}

fn candidates() -> impl Strategy<Value = Vec<RepairCandidate>> {
    prop::collection::vec(("[a-c]{1,3}", (0usize..6, 0usize..6, 0usize..6, 0u8..=100)), 0..12)
        .prop_map(|v| v.into_iter().map(|(s, f)| candidate(s, f)).collect())
}

fn order(c: &[RepairCandidate]) -> Vec<String> {
    c.iter().map(|c| c.repaired.clone()).collect()
}

proptest! {
    // Powers of two scale every score exactly, so the order cannot move.
    #[test]
    fn ranking_ignores_positive_weight_scale(cands in candidates(), exp in -4i32..5, w in prop::array::uniform4(-8i32..8)) {
        let base = Weights { edit_distance: w[0] as f64, alnum_edits: w[1] as f64, min_distance_to_column: w[2] as f64, coverage: w[3] as f64 };
        let k = 2f64.powi(exp);
        let scaled = Weights {
            edit_distance: base.edit_distance * k,
            alnum_edits: base.alnum_edits * k,
            min_distance_to_column: base.min_distance_to_column * k,
            coverage: base.coverage * k,
        };
        prop_assert_eq!(order(&rank(cands.clone(), &base)), order(&rank(cands, &scaled)));
    }

    #[test]
    fn ranking_is_deterministic_and_deduplicated(cands in candidates()) {
        let a = rank(cands.clone(), &Weights::HEURISTIC);
        let mut rev = cands;
        rev.reverse();
        let b = rank(rev, &Weights::HEURISTIC);
        prop_assert_eq!(order(&a), order(&b));
        let mut uniq = order(&a);
        uniq.sort();
        uniq.dedup();
        prop_assert_eq!(uniq.len(), a.len());
        prop_assert!(a.windows(2).all(|p| p[0].score >= p[1].score));
    }

    #[test]
    fn corruption_log_restores_the_table(values in prop::collection::vec("[A-Za-z0-9 .,_-]{0,10}", 1..30), seed in any::<u64>(), rate in 0.0f64..=1.0) {
        let table = Table::new("t", vec![Column::from_strs("c", &values)]).unwrap();
        let spec = NoiseSpec { cell_probability: rate, seed, ..Default::default() };
        let (dirty, log) = corrupt(&table, &spec).unwrap();
        prop_assert_eq!(restore(&dirty, &log).unwrap(), table.clone());
        for e in &log.entries {
            prop_assert!(e.original != e.corrupted);
            prop_assert!((1..=4).contains(&e.ops.len()));
        }
        let (again, log2) = corrupt(&table, &spec).unwrap();
        prop_assert_eq!(again, dirty);
        prop_assert_eq!(log2, log);
    }

    #[test]
    fn masking_is_reversible(values in prop::collection::vec("(US|u\\.k\\.|usa|red|dark green|IND|x)?[-_ ]?[0-9]{0,3}[a-z]{0,2}", 1..20)) {
        let col = abstract_column(&values, &SemanticTypeList::default(), &DictionaryOracle::bundled());
        for (i, v) in values.iter().enumerate() {
            let back = concretize_masks(&col.masked_values[i], &col.mask_table[i], ConcretizeMode::ReuseOnly, &HashMap::new()).unwrap();
            prop_assert_eq!(&back, v);
        }
    }

    #[test]
    fn learned_patterns_cover_and_detection_is_sound(values in prop::collection::vec("[A-C]{1,2}-?[0-9]{1,3}", 1..25), delta in 0.05f64..=1.0) {
        let patterns = learn_patterns(&values, 6);
        for v in &values {
            prop_assert!(patterns.iter().any(|p| p.matches(v)), "{} uncovered", v);
        }
        let set = select_significant(patterns, delta).unwrap();
        let report = detect("c", &values, &set);
        for e in &report.errors {
            prop_assert!(set.significant.iter().all(|p| !p.matches(&e.masked)));
        }
        let flagged = report.errors.len();
        let accepted = values.iter().filter(|v| set.accepts_significant(v)).count();
        if set.significant.is_empty() {
            prop_assert_eq!(flagged, 0);
        } else {
            prop_assert_eq!(flagged + accepted, values.len());
        }
    }

    #[test]
    fn csv_round_trip(rows in prop::collection::vec(("[ -~]{0,8}", "[a-z\",\n ]{0,6}"), 1..15)) {
        let a: Vec<String> = rows.iter().map(|r| r.0.clone()).collect();
        let b: Vec<String> = rows.iter().map(|r| r.1.clone()).collect();
        let table = Table::new("t", vec![Column::from_strs("a", &a), Column::from_strs("b", &b)]).unwrap();
        let back = load_table_str(&table.to_csv_string()).unwrap();
        prop_assert_eq!(back.columns, table.columns);
    }
}
