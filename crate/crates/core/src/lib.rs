//! Unsupervised detection and repair of string errors in table columns.
//!
//! The engine learns a small set of regular patterns for each string column,
//! flags values that fall outside the patterns covering a large fraction of the
//! column, and repairs them with minimal edit programs computed over an
//! unrolled automaton of each such pattern. Character classes and disjunctions
//! emitted by those programs are resolved with small decision trees learned
//! from the other rows of the table, and semantic substrings (countries,
//! colors, ...) can be abstracted into atomic mask tokens by a pluggable
//! oracle before profiling.
//!
//! ```
//! use strfix::profiler::{learn_patterns, select_significant};
//! use strfix::detector::detect;
//!
//! let values: Vec<String> = ["A2.A3.", "A5.A7.", "A1.", "A9.A2.A5.", "AAA3"]
//!     .iter().map(|s| s.to_string()).collect();
//! let patterns = learn_patterns(&values, 6);
//! let set = select_significant(patterns, 0.3).unwrap();
//! let report = detect("col", &values, &set);
//! assert_eq!(report.errors.len(), 1);
//! assert_eq!(report.errors[0].masked, "AAA3");
//! ```

pub mod alphabet;
pub mod bench;
pub mod concretizer;
pub mod corruptor;
pub mod detector;
pub mod edit;
mod error;
pub mod exec;
pub mod pipeline;
pub mod profiler;
pub mod ranker;
pub mod report;
pub mod semantics;
pub mod table;

pub use error::{Error, Result};
