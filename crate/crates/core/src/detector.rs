//! Error detection: values accepted by no significant pattern.

use serde::Serialize;

use crate::profiler::PatternSet;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DetectedError {
    pub row: usize,
    pub raw: String,
    pub masked: String,
}

#[derive(Debug, Clone)]
pub struct DetectionReport {
    pub column: String,
    pub errors: Vec<DetectedError>,
    pub pattern_set: PatternSet,
    pub row_count: usize,
    pub fire_rate: f64,
}

/// One profiled cell: its row, raw text and masked text.
#[derive(Debug, Clone, Copy)]
pub struct Cell<'a> {
    pub row: usize,
    pub raw: &'a str,
    pub masked: &'a str,
}

/// Flags every cell matching no significant pattern. With no significant
/// pattern nothing can be detected and the report is empty.
pub fn detect_cells(column: &str, cells: &[Cell<'_>], row_count: usize, set: &PatternSet) -> DetectionReport {
    let errors: Vec<DetectedError> = if set.significant.is_empty() {
        Vec::new()
    } else {
        cells
            .iter()
            .filter(|c| !set.accepts_significant(c.masked))
            .map(|c| DetectedError {
                row: c.row,
                raw: c.raw.to_string(),
                masked: c.masked.to_string(),
            })
            .collect()
    };
    let fire_rate = if row_count == 0 {
        0.0
    } else {
        errors.len() as f64 / row_count as f64
    };
    DetectionReport {
        column: column.to_string(),
        errors,
        pattern_set: set.clone(),
        row_count,
        fire_rate,
    }
}

/// Detection over a plain list of (already masked) values; row `i` is
/// value `i`.
pub fn detect(column: &str, values: &[String], set: &PatternSet) -> DetectionReport {
    let cells: Vec<Cell<'_>> = values.iter().enumerate().map(|(row, v)| Cell { row, raw: v, masked: v }).collect();
    detect_cells(column, &cells, values.len(), set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiler::{select_significant, Pattern};

    fn set(patterns: &[(&str, f64)], delta: f64) -> PatternSet {
        let ps = patterns.iter().map(|(s, c)| Pattern::parse(s).unwrap().with_coverage(*c)).collect();
        select_significant(ps, delta).unwrap()
    }

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn flags_values_outside_significant_patterns() {
        let vals = strings(&["A2.A3.", "A5.A7.", "A1.", "A9.A2.A5.", "AAA3"]);
        let s = set(&[("(A[0-9].)+", 0.8), ("AAA3", 0.2)], 0.3);
        let r = detect("c", &vals, &s);
        assert_eq!(r.errors.len(), 1);
        assert_eq!(r.errors[0].row, 4);
        assert!((r.fire_rate - 0.2).abs() < 1e-12);
    }

    #[test]
    fn empty_significant_set_detects_nothing() {
        let vals = strings(&["a", "b"]);
        let s = set(&[("a", 0.5), ("b", 0.5)], 0.9);
        assert!(s.significant.is_empty());
        assert!(detect("c", &vals, &s).errors.is_empty());
    }
}
