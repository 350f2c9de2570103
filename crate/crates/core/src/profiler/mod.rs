//! Regular pattern profiles of string columns.
//!
//! [`learn_patterns`] covers a column with at most `k` patterns and
//! [`select_significant`] keeps the ones matching at least a fraction `delta`
//! of the values. Patterns are full-string matchers over characters, mask
//! tokens, character classes, literal disjunctions and `+` groups.

mod learn;
mod syntax;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::edit::nfa::Nfa;
use crate::{Error, Result};

pub use learn::{learn_patterns, learn_patterns_with, LearnOptions};
pub use syntax::parse_pattern;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CharClass {
    Digit,
    Lower,
    Upper,
    Letter,
    Alnum,
    Space,
    AlnumSpace,
    Binary,
}

impl CharClass {
    pub fn contains(self, c: char) -> bool {
        match self {
            CharClass::Digit => c.is_ascii_digit(),
            CharClass::Lower => c.is_ascii_lowercase(),
            CharClass::Upper => c.is_ascii_uppercase(),
            CharClass::Letter => c.is_ascii_alphabetic(),
            CharClass::Alnum => c.is_ascii_alphanumeric(),
            CharClass::Space => c == ' ' || c == '\t',
            CharClass::AlnumSpace => c.is_ascii_alphanumeric() || c == ' ' || c == '\t',
            CharClass::Binary => c == '0' || c == '1',
        }
    }

    pub fn members(self) -> Vec<char> {
        let ascii = (0u8..128).map(char::from);
        match self {
            CharClass::Space => vec![' ', '\t'],
            CharClass::AlnumSpace => {
                let mut v: Vec<char> = ascii.filter(|c| c.is_ascii_alphanumeric()).collect();
                v.push(' ');
                v.push('\t');
                v
            }
            _ => ascii.filter(|&c| self.contains(c)).collect(),
        }
    }

    pub fn size(self) -> usize {
        match self {
            CharClass::Digit => 10,
            CharClass::Lower | CharClass::Upper => 26,
            CharClass::Letter => 52,
            CharClass::Alnum => 62,
            CharClass::Space | CharClass::Binary => 2,
            CharClass::AlnumSpace => 64,
        }
    }

    pub fn is_alnum(self) -> bool {
        !matches!(self, CharClass::Space)
    }

    pub fn syntax(self) -> &'static str {
        match self {
            CharClass::Digit => "[0-9]",
            CharClass::Lower => "[a-z]",
            CharClass::Upper => "[A-Z]",
            CharClass::Letter => "[a-zA-Z]",
            CharClass::Alnum => "[0-9a-zA-Z]",
            CharClass::Space => "␣",
            CharClass::AlnumSpace => "[0-9a-zA-Z␣]",
            CharClass::Binary => "[0-1]",
        }
    }

    pub const ALL: [CharClass; 8] = [
        CharClass::Digit,
        CharClass::Lower,
        CharClass::Upper,
        CharClass::Letter,
        CharClass::Alnum,
        CharClass::Space,
        CharClass::AlnumSpace,
        CharClass::Binary,
    ];
}

/// An atomic mask symbol in a pattern, with the semantic type it stands for.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MaskToken {
    pub symbol: char,
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantifier {
    Once,
    OneOrMore,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PatternNode {
    Literal(char),
    Class(CharClass),
    Mask(MaskToken),
    /// Non-empty, distinct literal alternatives.
    Disjunction(Vec<String>),
    Group(Vec<PatternNode>, Quantifier),
    Sequence(Vec<PatternNode>),
}

impl PatternNode {
    pub fn literal_str(s: &str) -> Vec<PatternNode> {
        s.chars().map(PatternNode::Literal).collect()
    }

    /// Visits nodes in preorder, passing each node's preorder index.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(usize, &'a PatternNode)) {
        let mut next = 0;
        self.walk_from(&mut next, f);
    }

    fn walk_from<'a>(&'a self, next: &mut usize, f: &mut impl FnMut(usize, &'a PatternNode)) {
        let id = *next;
        *next += 1;
        f(id, self);
        if let PatternNode::Group(children, _) | PatternNode::Sequence(children) = self {
            for c in children {
                c.walk_from(next, f);
            }
        }
    }

    /// Number of nodes in the tree rooted here.
    pub fn node_count(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_, _| n += 1);
        n
    }

    /// Minimum number of symbols in any accepted string.
    pub fn min_len(&self) -> usize {
        match self {
            PatternNode::Literal(_) | PatternNode::Class(_) | PatternNode::Mask(_) => 1,
            PatternNode::Disjunction(alts) => alts.iter().map(|a| a.chars().count()).min().unwrap_or(0),
            PatternNode::Group(children, _) | PatternNode::Sequence(children) => children.iter().map(PatternNode::min_len).sum(),
        }
    }

    pub fn has_cycle(&self) -> bool {
        match self {
            PatternNode::Group(children, q) => *q == Quantifier::OneOrMore || children.iter().any(PatternNode::has_cycle),
            PatternNode::Sequence(children) => children.iter().any(PatternNode::has_cycle),
            _ => false,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            PatternNode::Disjunction(alts) => {
                if alts.is_empty() {
                    return Err(Error::PatternSyntax {
                        offset: 0,
                        message: "empty disjunction".into(),
                    });
                }
                let mut seen = std::collections::HashSet::new();
                for a in alts {
                    if a.is_empty() || !seen.insert(a) {
                        return Err(Error::PatternSyntax {
                            offset: 0,
                            message: "disjunction alternatives must be non-empty and distinct".into(),
                        });
                    }
                }
                Ok(())
            }
            PatternNode::Group(children, Quantifier::OneOrMore) if children.iter().map(PatternNode::min_len).sum::<usize>() == 0 => {
                Err(Error::PatternSyntax {
                    offset: 0,
                    message: "repeated group must consume at least one symbol".into(),
                })
            }
            PatternNode::Group(children, _) | PatternNode::Sequence(children) => children.iter().try_for_each(PatternNode::validate),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PatternId(pub u32);

impl fmt::Display for PatternId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

/// A learned pattern with the fraction of the profiled column it accepts.
#[derive(Debug, Clone)]
pub struct Pattern {
    pub id: PatternId,
    pub root: PatternNode,
    pub coverage: f64,
    nfa: Arc<Nfa>,
}

impl Pattern {
    pub fn new(id: PatternId, root: PatternNode) -> Result<Self> {
        root.validate()?;
        let nfa = Arc::new(Nfa::compile(&root));
        Ok(Self {
            id,
            root,
            coverage: 0.0,
            nfa,
        })
    }

    pub fn parse(src: &str) -> Result<Self> {
        Self::new(PatternId(0), parse_pattern(src, &crate::semantics::SemanticTypeList::default())?)
    }

    pub fn with_coverage(mut self, coverage: f64) -> Self {
        self.coverage = coverage;
        self
    }

    pub fn nfa(&self) -> &Nfa {
        &self.nfa
    }

    /// Full-string membership.
    pub fn matches(&self, value: &str) -> bool {
        self.nfa.accepts(value)
    }

    /// Canonical text syntax, e.g. `(A[0-9].)+`.
    pub fn syntax(&self) -> String {
        self.root.to_string()
    }
}

impl PartialEq for Pattern {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id && self.root == other.root && self.coverage == other.coverage
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

/// Membership test.
pub fn is_match(pattern: &Pattern, value: &str) -> bool {
    pattern.matches(value)
}

#[derive(Debug, Clone)]
pub struct PatternSet {
    pub all: Vec<Pattern>,
    pub significant: Vec<Pattern>,
    pub delta: f64,
}

impl PatternSet {
    /// Treats every pattern as significant, as execution-guided repair does.
    pub fn all_significant(patterns: Vec<Pattern>) -> Self {
        Self {
            significant: patterns.clone(),
            all: patterns,
            delta: 0.0,
        }
    }

    pub fn accepts_significant(&self, value: &str) -> bool {
        self.significant.iter().any(|p| p.matches(value))
    }
}

/// Keeps the patterns whose coverage is at least `delta`.
pub fn select_significant(patterns: Vec<Pattern>, delta: f64) -> Result<PatternSet> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Config(format!("delta must be in (0, 1], got {delta}")));
    }
    let significant = patterns.iter().filter(|p| p.coverage >= delta).cloned().collect();
    Ok(PatternSet {
        all: patterns,
        significant,
        delta,
    })
}

/// Fraction of `values` accepted by `pattern`, by exhaustive matching.
pub fn coverage(pattern: &Pattern, values: &[String]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().filter(|v| pattern.matches(v)).count() as f64 / values.len() as f64
}

/// Coverage over distinct values with multiplicities, out of `total` values.
pub fn coverage_weighted<'a>(pattern: &Pattern, values: impl IntoIterator<Item = (&'a str, usize)>, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let hits: usize = values.into_iter().filter(|(v, _)| pattern.matches(v)).map(|(_, w)| w).sum();
    hits as f64 / total as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Pattern {
        Pattern::parse(s).unwrap()
    }

    #[test]
    fn repeated_group_membership() {
        let pat = p("(A[0-9].)+");
        assert!(pat.matches("A2.A3."));
        assert!(pat.matches("A1."));
        assert!(!pat.matches("AAA3"));
        assert!(!pat.matches(""));
    }

    #[test]
    fn empty_string_membership() {
        assert!(Pattern::new(PatternId(0), PatternNode::Sequence(vec![])).unwrap().matches(""));
        assert!(!p("x").matches(""));
    }

    #[test]
    fn disjunction_membership() {
        let pat = p("(a|bb)");
        assert!(pat.matches("a"));
        assert!(pat.matches("bb"));
        assert!(!pat.matches("b"));
        assert!(!pat.matches("abb"));
    }

    #[test]
    fn significance_threshold() {
        let mk = |c: f64| p("x").with_coverage(c);
        let set = select_significant(vec![mk(0.6), mk(0.3), mk(0.1)], 0.2).unwrap();
        assert_eq!(set.significant.len(), 2);
        let none = select_significant(vec![mk(0.1), mk(0.1)], 0.3).unwrap();
        assert!(none.significant.is_empty());
        assert!(select_significant(vec![], 1.01).is_err());
        assert!(select_significant(vec![], 0.0).is_err());
    }

    #[test]
    fn invalid_disjunction_rejected() {
        let dup = PatternNode::Disjunction(vec!["a".into(), "a".into()]);
        assert!(Pattern::new(PatternId(0), dup).is_err());
        let empty = PatternNode::Disjunction(vec!["".into(), "a".into()]);
        assert!(Pattern::new(PatternId(0), empty).is_err());
    }

    #[test]
    fn classes_are_consistent() {
        for class in CharClass::ALL {
            let m = class.members();
            assert_eq!(m.len(), class.size(), "{class:?}");
            assert!(m.iter().all(|&c| class.contains(c)));
        }
    }
}
