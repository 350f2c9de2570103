use std::fmt;

use serde::{Serialize, Serializer};

use crate::alphabet;
use crate::profiler::{CharClass, PatternId};
use crate::{Error, Result};

/// Identity of an abstract choice point: the pattern node and the unroll copy
/// path of the repeated groups around it. Stable across rows of a column.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SlotKey {
    pub node: usize,
    pub copy: Vec<u32>,
}

impl fmt::Display for SlotKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.node)?;
        for c in &self.copy {
            write!(f, ".{c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Emit {
    Char(char),
    /// Any member of a character class.
    Class {
        class: CharClass,
        slot: SlotKey,
    },
    /// Any of the (equal-length) alternatives of a disjunction.
    Disjunction {
        alternatives: Vec<String>,
        slot: SlotKey,
    },
    /// A mask token; `fill` is the substring it will be concretized to when
    /// the token does not come from the source value.
    Mask {
        symbol: char,
        name: String,
        slot: SlotKey,
        fill: Option<String>,
    },
    /// A concrete disjunction alternative.
    Text(String),
}

impl Emit {
    pub fn is_abstract(&self) -> bool {
        matches!(self, Emit::Class { .. } | Emit::Disjunction { .. })
    }

    pub fn slot(&self) -> Option<&SlotKey> {
        match self {
            Emit::Class { slot, .. } | Emit::Disjunction { slot, .. } | Emit::Mask { slot, .. } => Some(slot),
            _ => None,
        }
    }

    fn symbol_count(&self) -> usize {
        match self {
            Emit::Text(s) => s.chars().count(),
            Emit::Disjunction { alternatives, .. } => alternatives.first().map_or(0, |a| a.chars().count()),
            _ => 1,
        }
    }

    fn alnum_count(&self) -> usize {
        match self {
            Emit::Char(c) => alphabet::is_alnum(*c) as usize,
            Emit::Class { class, .. } => class.is_alnum() as usize,
            Emit::Mask { .. } => 1,
            Emit::Text(s) => s.chars().filter(|c| alphabet::is_alnum(*c)).count(),
            Emit::Disjunction { alternatives, .. } => alternatives
                .first()
                .map_or(0, |a| a.chars().filter(|c| alphabet::is_alnum(*c)).count()),
        }
    }
}

impl fmt::Display for Emit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Emit::Char(c) => match alphabet::mask_index(*c) {
                Some(i) => write!(f, "{{m{}}}", i + 1),
                None => write!(f, "{c}"),
            },
            Emit::Class { class, .. } => f.write_str(class.syntax()),
            Emit::Disjunction { alternatives, .. } => f.write_str(&alternatives.join("|")),
            Emit::Mask { name, .. } => write!(f, "{{{name}}}"),
            Emit::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum EditAction {
    Match,
    Delete,
    Insert(Emit),
    Substitute(Emit),
    /// Rewrites a whole disjunction occurrence: consumes `consumed` source
    /// symbols and emits one alternative. Costs one per emitted symbol.
    Choose {
        consumed: usize,
        emit: Emit,
    },
}

impl EditAction {
    pub fn cost(&self) -> u32 {
        match self {
            EditAction::Match => 0,
            EditAction::Delete | EditAction::Insert(_) | EditAction::Substitute(_) => 1,
            EditAction::Choose { emit, .. } => emit.symbol_count() as u32,
        }
    }

    pub fn emit(&self) -> Option<&Emit> {
        match self {
            EditAction::Insert(e) | EditAction::Substitute(e) | EditAction::Choose { emit: e, .. } => Some(e),
            _ => None,
        }
    }

    pub fn emit_mut(&mut self) -> Option<&mut Emit> {
        match self {
            EditAction::Insert(e) | EditAction::Substitute(e) | EditAction::Choose { emit: e, .. } => Some(e),
            _ => None,
        }
    }

    /// Source symbols consumed by this action.
    pub fn consumes(&self) -> usize {
        match self {
            EditAction::Match | EditAction::Delete | EditAction::Substitute(_) => 1,
            EditAction::Insert(_) => 0,
            EditAction::Choose { consumed, .. } => *consumed,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            EditAction::Match => 0,
            EditAction::Insert(_) => 1,
            EditAction::Delete => 2,
            EditAction::Substitute(_) => 3,
            EditAction::Choose { .. } => 4,
        }
    }
}

impl fmt::Display for EditAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EditAction::Match => f.write_str("M"),
            EditAction::Delete => f.write_str("D"),
            EditAction::Insert(e) => write!(f, "I({e})"),
            EditAction::Substitute(e) => write!(f, "S({e})"),
            EditAction::Choose { consumed: 0, emit } => write!(f, "I({emit})"),
            EditAction::Choose { consumed, emit } if *consumed == emit.symbol_count() => write!(f, "S({emit})"),
            EditAction::Choose { consumed, emit } => write!(f, "S{consumed}({emit})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EditProgram {
    pub actions: Vec<EditAction>,
    pub cost: u32,
    pub pattern: PatternId,
}

impl EditProgram {
    pub fn new(actions: Vec<EditAction>, pattern: PatternId) -> Self {
        let cost = actions.iter().map(EditAction::cost).sum();
        Self { actions, cost, pattern }
    }

    pub fn is_abstract(&self) -> bool {
        self.actions.iter().any(|a| a.emit().is_some_and(Emit::is_abstract))
    }

    /// Number of edits that delete or emit alphanumeric content.
    pub fn alnum_edits(&self, source: &[char]) -> usize {
        let mut cursor = 0;
        let mut n = 0;
        for a in &self.actions {
            let consumed_alnum = source
                .get(cursor..cursor + a.consumes())
                .map_or(0, |s| s.iter().filter(|c| alphabet::is_alnum(**c)).count());
            n += match a {
                EditAction::Match => 0,
                EditAction::Delete => consumed_alnum,
                EditAction::Insert(e) => e.alnum_count(),
                EditAction::Substitute(e) => (consumed_alnum > 0 || e.alnum_count() > 0) as usize,
                EditAction::Choose { emit, .. } => emit.alnum_count().max(consumed_alnum),
            };
            cursor += a.consumes();
        }
        n
    }

    /// Index of the first non-match action, or the program length.
    pub fn first_edit(&self) -> usize {
        self.actions
            .iter()
            .position(|a| *a != EditAction::Match)
            .unwrap_or(self.actions.len())
    }

    /// Total order used to break ties between equal-cost programs: fewer
    /// alphanumeric edits, then edits further to the right, then action order.
    pub fn tie_break_cmp(&self, other: &Self, source: &[char]) -> std::cmp::Ordering {
        self.alnum_edits(source)
            .cmp(&other.alnum_edits(source))
            .then_with(|| other.first_edit().cmp(&self.first_edit()))
            .then_with(|| {
                let ka = self.actions.iter().map(|a| (a.rank(), a.to_string()));
                let kb = other.actions.iter().map(|a| (a.rank(), a.to_string()));
                ka.cmp(kb)
            })
    }
}

impl fmt::Display for EditProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, a) in self.actions.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            a.fmt(f)?;
        }
        f.write_str("]")
    }
}

impl Serialize for EditProgram {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

fn emit_text(e: &Emit, out: &mut String) -> Result<()> {
    match e {
        Emit::Char(c) => out.push(*c),
        Emit::Mask { symbol, .. } => out.push(*symbol),
        Emit::Text(s) => out.push_str(s),
        Emit::Class { .. } | Emit::Disjunction { .. } => return Err(Error::Apply(format!("abstract emit {e} must be concretized first"))),
    }
    Ok(())
}

/// Applies a concrete program left to right, returning the output and the
/// number of source symbols consumed. Actions may run out before the source
/// does.
pub fn apply_partial(program: &EditProgram, value: &str) -> Result<(String, usize)> {
    let source: Vec<char> = value.chars().collect();
    let mut out = String::new();
    let mut cursor = 0;
    for (i, a) in program.actions.iter().enumerate() {
        let need = a.consumes();
        if cursor + need > source.len() {
            return Err(Error::Apply(format!("action {i} ({a}) runs past the end of the value")));
        }
        match a {
            EditAction::Match => out.push(source[cursor]),
            EditAction::Delete => {}
            EditAction::Insert(e) | EditAction::Substitute(e) | EditAction::Choose { emit: e, .. } => emit_text(e, &mut out)?,
        }
        cursor += need;
    }
    Ok((out, cursor))
}

/// Applies a concrete program, which must consume the whole value.
pub fn apply(program: &EditProgram, value: &str) -> Result<String> {
    let (out, consumed) = apply_partial(program, value)?;
    let len = value.chars().count();
    if consumed != len {
        return Err(Error::Apply(format!("program consumed {consumed} of {len} symbols")));
    }
    Ok(out)
}
