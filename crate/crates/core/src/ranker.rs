//! Scoring and ordering of concrete repair candidates.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::edit::EditProgram;
use crate::profiler::PatternId;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Weights {
    pub edit_distance: f64,
    pub alnum_edits: f64,
    pub min_distance_to_column: f64,
    pub coverage: f64,
}

impl Weights {
    pub const HEURISTIC: Weights = Weights {
        edit_distance: -1.0,
        alnum_edits: -0.5,
        min_distance_to_column: -0.2,
        coverage: 3.0,
    };

    /// Ranks by edit distance alone.
    pub const EDIT_DISTANCE: Weights = Weights {
        edit_distance: -1.0,
        alnum_edits: 0.0,
        min_distance_to_column: 0.0,
        coverage: 0.0,
    };

    pub fn as_array(&self) -> [f64; 4] {
        [self.edit_distance, self.alnum_edits, self.min_distance_to_column, self.coverage]
    }
}

impl Default for Weights {
    fn default() -> Self {
        Self::HEURISTIC
    }
}

impl FromStr for Weights {
    type Err = Error;

    /// Parses `w1,w2,w3,w4`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("weights `{s}`: {e}")))?;
        let [a, b, c, d] = parts[..] else {
            return Err(Error::Config(format!("weights `{s}`: expected four comma-separated numbers")));
        };
        if parts.iter().any(|w| !w.is_finite()) {
            return Err(Error::Config(format!("weights `{s}` must be finite")));
        }
        Ok(Weights {
            edit_distance: a,
            alnum_edits: b,
            min_distance_to_column: c,
            coverage: d,
        })
    }
}

impl fmt::Display for Weights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.as_array();
        write!(f, "{a},{b},{c},{d}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RankingMode {
    #[default]
    Heuristic,
    EditDistance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CandidateFeatures {
    pub edit_distance: usize,
    pub alnum_edits: usize,
    pub min_distance_to_column: usize,
    pub pattern_coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepairCandidate {
    pub row: usize,
    pub original: String,
    pub repaired: String,
    pub pattern: PatternId,
    pub program: EditProgram,
    pub features: CandidateFeatures,
    pub score: f64,
}

/// Levenshtein distance over chars.
pub fn edit_distance(a: &str, b: &str) -> usize {
    strsim::levenshtein(a, b)
}

/// Distance from `value` to the closest reference value (0 if any equals
/// it; the length of `value` when there are none).
pub fn min_distance(value: &str, reference: &[String]) -> usize {
    let mut best = value.chars().count();
    for r in reference {
        let d = edit_distance(value, r);
        if d < best {
            best = d;
            if d == 0 {
                break;
            }
        }
    }
    best
}

pub fn score(features: &CandidateFeatures, w: &Weights) -> f64 {
    w.edit_distance * features.edit_distance as f64
        + w.alnum_edits * features.alnum_edits as f64
        + w.min_distance_to_column * features.min_distance_to_column as f64
        + w.coverage * features.pattern_coverage
}

/// Scores, deduplicates by repaired value (keeping the best-scoring copy)
/// and sorts: score descending, then edit distance, then repaired value.
pub fn rank(mut candidates: Vec<RepairCandidate>, w: &Weights) -> Vec<RepairCandidate> {
    for c in &mut candidates {
        c.score = score(&c.features, w);
    }
    candidates.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.features.edit_distance.cmp(&b.features.edit_distance))
            .then_with(|| a.repaired.cmp(&b.repaired))
    });
    let mut seen = HashSet::new();
    candidates.retain(|c| seen.insert(c.repaired.clone()));
    candidates
}
