//! Canonical text syntax for patterns.
//!
//! Classes print as `[0-9] [a-z] [A-Z] [a-zA-Z] [0-9a-zA-Z] ␣ [0-1]`, masks
//! as `{type}`, disjunctions as `(a|b)` and repeated groups as `(...)+`.
//! Metacharacters inside literals are escaped with a backslash.

use std::fmt::{self, Write};

use super::{CharClass, MaskToken, PatternNode, Quantifier};
use crate::alphabet;
use crate::semantics::SemanticTypeList;
use crate::{Error, Result};

const META: &[char] = &['(', ')', '[', ']', '{', '}', '|', '+', '\\', '␣'];

fn write_literal(f: &mut fmt::Formatter<'_>, c: char) -> fmt::Result {
    if META.contains(&c) {
        f.write_char('\\')?;
    }
    match alphabet::mask_index(c) {
        Some(i) => write!(f, "{{m{}}}", i + 1),
        None => f.write_char(c),
    }
}

fn is_atom(node: &PatternNode) -> bool {
    matches!(node, PatternNode::Literal(_) | PatternNode::Class(_) | PatternNode::Mask(_))
}

impl fmt::Display for PatternNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternNode::Literal(c) => write_literal(f, *c),
            PatternNode::Class(c) => f.write_str(c.syntax()),
            PatternNode::Mask(m) => write!(f, "{{{}}}", m.name),
            PatternNode::Disjunction(alts) => {
                f.write_char('(')?;
                for (i, alt) in alts.iter().enumerate() {
                    if i > 0 {
                        f.write_char('|')?;
                    }
                    for c in alt.chars() {
                        write_literal(f, c)?;
                    }
                }
                f.write_char(')')
            }
            PatternNode::Group(children, q) => {
                let bare = *q == Quantifier::OneOrMore && children.len() == 1 && is_atom(&children[0]);
                if !bare {
                    f.write_char('(')?;
                }
                for c in children {
                    c.fmt(f)?;
                }
                if !bare {
                    f.write_char(')')?;
                }
                if *q == Quantifier::OneOrMore {
                    f.write_char('+')?;
                }
                Ok(())
            }
            PatternNode::Sequence(children) => children.iter().try_for_each(|c| c.fmt(f)),
        }
    }
}

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    types: &'a SemanticTypeList,
}

impl Parser<'_> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::PatternSyntax {
            offset: self.pos,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek();
        self.pos += 1;
        c
    }

    fn sequence(&mut self) -> Result<Vec<PatternNode>> {
        let mut out = Vec::new();
        while let Some(c) = self.peek() {
            let atom = match c {
                ')' | '|' => break,
                '+' => return self.err("nothing to repeat"),
                '(' => self.group()?,
                '[' => self.class()?,
                '{' => self.mask()?,
                '␣' => {
                    self.bump();
                    PatternNode::Class(CharClass::Space)
                }
                '\\' => {
                    self.bump();
                    match self.bump() {
                        Some(c) => PatternNode::Literal(c),
                        None => return self.err("dangling escape"),
                    }
                }
                _ => {
                    self.bump();
                    PatternNode::Literal(c)
                }
            };
            if self.peek() == Some('+') {
                self.bump();
                out.push(match atom {
                    PatternNode::Group(children, Quantifier::Once) => PatternNode::Group(children, Quantifier::OneOrMore),
                    PatternNode::Group(_, Quantifier::OneOrMore) => return self.err("nested quantifier"),
                    other => PatternNode::Group(vec![other], Quantifier::OneOrMore),
                });
            } else {
                out.push(atom);
            }
        }
        Ok(out)
    }

    fn group(&mut self) -> Result<PatternNode> {
        self.bump();
        let mut alts = vec![self.sequence()?];
        while self.peek() == Some('|') {
            self.bump();
            alts.push(self.sequence()?);
        }
        if self.peek() != Some(')') {
            return self.err("unclosed group");
        }
        self.bump();
        if alts.len() == 1 {
            let body = alts.pop().unwrap();
            if body.is_empty() {
                return self.err("empty group");
            }
            return Ok(PatternNode::Group(body, Quantifier::Once));
        }
        let mut strings = Vec::with_capacity(alts.len());
        for alt in alts {
            let mut s = String::new();
            for node in alt {
                match node {
                    PatternNode::Literal(c) => s.push(c),
                    _ => return self.err("disjunction alternatives must be literal strings"),
                }
            }
            strings.push(s);
        }
        Ok(PatternNode::Disjunction(strings))
    }

    fn class(&mut self) -> Result<PatternNode> {
        let start = self.pos;
        while let Some(c) = self.bump() {
            if c == ']' {
                let text: String = self.chars[start..self.pos].iter().collect();
                return match CharClass::ALL.iter().find(|k| k.syntax() == text) {
                    Some(k) => Ok(PatternNode::Class(*k)),
                    None => {
                        self.pos = start;
                        self.err(format!("unknown character class {text}"))
                    }
                };
            }
        }
        self.pos = start;
        self.err("unclosed character class")
    }

    fn mask(&mut self) -> Result<PatternNode> {
        let start = self.pos;
        self.bump();
        let mut name = String::new();
        loop {
            match self.bump() {
                Some('}') => break,
                Some(c) => name.push(c),
                None => {
                    self.pos = start;
                    return self.err("unclosed mask");
                }
            }
        }
        match self.types.index_of(&name) {
            Some(i) => Ok(PatternNode::Mask(MaskToken {
                symbol: alphabet::mask_symbol(i),
                name,
            })),
            None => {
                self.pos = start;
                self.err(format!("unknown semantic type `{name}`"))
            }
        }
    }
}

/// Parses the canonical syntax. The root is always a sequence.
pub fn parse_pattern(src: &str, types: &SemanticTypeList) -> Result<PatternNode> {
    let mut p = Parser {
        chars: src.chars().collect(),
        pos: 0,
        types,
    };
    let nodes = p.sequence()?;
    if p.pos < p.chars.len() {
        return p.err("unbalanced ')' or '|'");
    }
    Ok(PatternNode::Sequence(nodes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round_trip(src: &str) {
        let node = parse_pattern(src, &SemanticTypeList::default()).unwrap();
        assert_eq!(node.to_string(), src);
    }

    #[test]
    fn canonical_forms_round_trip() {
        for src in [
            "(A[0-9].)+",
            "[0-9]+",
            "{country}-[0-9][0-9][0-9]-(JUN|PRO)",
            "C-[0-9][0-9]",
            "[a-z]+␣[0-1]",
            "x\\+y\\(z\\)",
            "((ab)+c)+",
            "",
        ] {
            round_trip(src);
        }
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        let types = SemanticTypeList::default();
        for (src, offset) in [("ab)", 2), ("+a", 0), ("[0-8]", 0), ("{planet}", 0), ("(a", 2)] {
            match parse_pattern(src, &types) {
                Err(Error::PatternSyntax { offset: o, .. }) => assert_eq!(o, offset, "{src}"),
                other => panic!("{src}: {other:?}"),
            }
        }
    }

    #[test]
    fn disjunction_must_be_literal() {
        assert!(parse_pattern("([0-9]|a)", &SemanticTypeList::default()).is_err());
    }
}
