//! Minimal edit programs into the language of an unrolled pattern.
//!
//! `cost(i, j)` is the cheapest way to have traversed edge `j` after consuming
//! the first `i` symbols of the value. Column 0 is a virtual edge standing
//! for the start state, with `cost(i, 0) = i` (delete everything so far).
//! For a real edge `j` with label `l(j)` and predecessor edges `p(j)`:
//!
//! ```text
//! cost(i, j) = min( min_{j' in p(j)} cost(i, j') + 1              insert
//!                 , min_{j' in p(j)} cost(i-1, j') + [s_i ∉ l(j)]  match / substitute
//!                 , cost(i-1, j) + 1 )                             delete
//! ```

use std::collections::{HashMap, HashSet};

use super::nfa::{Edge, Label, UnrolledDag, START};
use super::program::{EditAction, EditProgram, Emit, SlotKey};
use crate::profiler::{PatternId, PatternNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    Start,
    Insert,
    Match,
    Substitute,
    Delete,
}

#[derive(Debug, Clone)]
pub struct DpMatrices {
    /// Number of symbols in the value plus one.
    pub rows: usize,
    /// Number of DAG edges plus one (column 0 is the start).
    pub cols: usize,
    pub cost: Vec<u32>,
    pub moves: Vec<Move>,
    /// `p(j)` for every column.
    pub preds: Vec<Vec<usize>>,
    /// Predecessor-edge inspections performed while filling.
    pub ops: u64,
}

impl DpMatrices {
    pub fn cost(&self, i: usize, j: usize) -> u32 {
        self.cost[i * self.cols + j]
    }

    pub fn moves(&self, i: usize, j: usize) -> Move {
        self.moves[i * self.cols + j]
    }
}

/// Label of DP column `j` (`None` for the start column).
pub fn column_label(dag: &UnrolledDag, j: usize) -> Option<Label> {
    (j > 0).then(|| dag.graph.edges[j - 1].label)
}

/// Columns whose edge ends in an accepting state, plus column 0 when the
/// start state accepts.
pub fn accepting_columns(dag: &UnrolledDag) -> Vec<usize> {
    let g = &dag.graph;
    let mut cols: Vec<usize> = g
        .edges
        .iter()
        .enumerate()
        .filter(|(_, e)| g.accepting[e.to])
        .map(|(i, _)| i + 1)
        .collect();
    if g.accepting[START] {
        cols.insert(0, 0);
    }
    cols
}

pub fn predecessors(dag: &UnrolledDag) -> Vec<Vec<usize>> {
    let g = &dag.graph;
    let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); g.state_count];
    for (i, e) in g.edges.iter().enumerate() {
        incoming[e.to].push(i + 1);
    }
    let mut preds = vec![Vec::new()];
    for e in &g.edges {
        preds.push(if e.from == START { vec![0] } else { incoming[e.from].clone() });
    }
    preds
}

/// Fills the cost and move matrices for `value` (as symbols).
pub fn fill(dag: &UnrolledDag, value: &[char]) -> DpMatrices {
    let n = value.len();
    let m = dag.graph.edges.len();
    let cols = m + 1;
    let preds = predecessors(dag);
    let mut cost = vec![u32::MAX; (n + 1) * cols];
    let mut moves = vec![Move::Start; (n + 1) * cols];
    let mut ops = 0u64;

    for i in 0..=n {
        cost[i * cols] = i as u32;
        moves[i * cols] = if i == 0 { Move::Start } else { Move::Delete };
        for j in 1..cols {
            let label = dag.graph.edges[j - 1].label;
            let mut best = u32::MAX;
            let mut mv = Move::Start;
            if i > 0 {
                let mismatch = !label.accepts(value[i - 1]) as u32;
                for &p in &preds[j] {
                    ops += 1;
                    let c = cost[(i - 1) * cols + p] + mismatch;
                    if c < best {
                        best = c;
                        mv = if mismatch == 0 { Move::Match } else { Move::Substitute };
                    }
                }
            }
            for &p in &preds[j] {
                ops += 1;
                let c = cost[i * cols + p] + 1;
                if c < best {
                    best = c;
                    mv = Move::Insert;
                }
            }
            if i > 0 {
                ops += 1;
                let c = cost[(i - 1) * cols + j] + 1;
                if c < best {
                    best = c;
                    mv = Move::Delete;
                }
            }
            cost[i * cols + j] = best;
            moves[i * cols + j] = mv;
        }
    }
    DpMatrices {
        rows: n + 1,
        cols,
        cost,
        moves,
        preds,
        ops,
    }
}

/// Minimal edit distance from `value` to the DAG's language.
pub fn min_cost(dag: &UnrolledDag, value: &str) -> Option<u32> {
    let chars: Vec<char> = value.chars().collect();
    let dp = fill(dag, &chars);
    accepting_columns(dag).into_iter().map(|j| dp.cost(chars.len(), j)).min()
}

/// A path of DAG edges (0-based edge indices) spelling `value`, if the value
/// is in the DAG's language. Among several parses, the one reached first in
/// edge order is returned.
pub fn match_path(dag: &UnrolledDag, value: &str) -> Option<Vec<usize>> {
    let g = &dag.graph;
    let chars: Vec<char> = value.chars().collect();
    let mut back: Vec<Vec<Option<usize>>> = vec![vec![None; g.state_count]; chars.len() + 1];
    let mut reach = vec![false; g.state_count];
    reach[START] = true;
    for (i, &c) in chars.iter().enumerate() {
        let mut next = vec![false; g.state_count];
        for s in (0..g.state_count).filter(|&s| reach[s]) {
            for &e in g.outgoing(s) {
                let edge = &g.edges[e];
                if !next[edge.to] && edge.label.accepts(c) {
                    next[edge.to] = true;
                    back[i + 1][edge.to] = Some(e);
                }
            }
        }
        reach = next;
    }
    let mut state = (0..g.state_count).find(|&s| reach[s] && g.accepting[s])?;
    let mut path = Vec::with_capacity(chars.len());
    for i in (1..=chars.len()).rev() {
        let e = back[i][state].expect("reachable state has a predecessor edge");
        path.push(e);
        state = g.edges[e].from;
    }
    path.reverse();
    Some(path)
}

#[derive(Clone, Copy, Debug)]
enum Step {
    Match,
    Substitute(usize),
    Insert(usize),
    Delete,
}

const PATH_LIMIT: usize = 512;

fn backtrack(dp: &DpMatrices, dag: &UnrolledDag, value: &[char], ends: &[usize], target: u32) -> Vec<Vec<Step>> {
    let mut paths = Vec::new();
    // (i, j, steps so far in reverse)
    let mut stack: Vec<(usize, usize, Vec<Step>)> = ends
        .iter()
        .rev()
        .filter(|&&j| dp.cost(value.len(), j) == target)
        .map(|&j| (value.len(), j, Vec::new()))
        .collect();
    while let Some((i, j, steps)) = stack.pop() {
        if paths.len() >= PATH_LIMIT {
            break;
        }
        if j == 0 {
            let mut steps = steps;
            steps.extend(std::iter::repeat_n(Step::Delete, i));
            steps.reverse();
            paths.push(steps);
            continue;
        }
        let c = dp.cost(i, j);
        let label = dag.graph.edges[j - 1].label;
        let mut branches = Vec::new();
        if i > 0 && dp.cost(i - 1, j) + 1 == c {
            branches.push((i - 1, j, Step::Delete));
        }
        for &p in dp.preds[j].iter() {
            if dp.cost(i, p).saturating_add(1) == c {
                branches.push((i, p, Step::Insert(j)));
            }
        }
        if i > 0 {
            let mismatch = !label.accepts(value[i - 1]) as u32;
            for &p in dp.preds[j].iter() {
                if dp.cost(i - 1, p).saturating_add(mismatch) == c {
                    let s = if mismatch == 0 { Step::Match } else { Step::Substitute(j) };
                    branches.push((i - 1, p, s));
                }
            }
        }
        // Last pushed is explored first: prefer match/substitute, then insert, then delete.
        for (ni, nj, s) in branches {
            let mut next = steps.clone();
            next.push(s);
            stack.push((ni, nj, next));
        }
    }
    paths
}

fn node_table(root: &PatternNode) -> HashMap<usize, &PatternNode> {
    let mut map = HashMap::new();
    root.walk(&mut |id, n| {
        map.insert(id, n);
    });
    map
}

fn slot(edge: &Edge) -> SlotKey {
    SlotKey {
        node: edge.origin.node,
        copy: edge.origin.copy.clone(),
    }
}

fn emit_for(edge: &Edge, nodes: &HashMap<usize, &PatternNode>) -> Emit {
    match (edge.label, nodes.get(&edge.origin.node)) {
        (Label::Class(class), _) => Emit::Class { class, slot: slot(edge) },
        (Label::Symbol(symbol), Some(PatternNode::Mask(m))) => Emit::Mask {
            symbol,
            name: m.name.clone(),
            slot: slot(edge),
            fill: None,
        },
        (Label::Symbol(c), _) => Emit::Char(c),
    }
}

/// Turns DP steps into actions, collapsing a disjunction alternative that was
/// produced entirely by inserts and substitutes into one abstract choice.
fn to_actions(steps: &[Step], dag: &UnrolledDag, nodes: &HashMap<usize, &PatternNode>) -> Vec<EditAction> {
    let edges = &dag.graph.edges;
    let mut out = Vec::with_capacity(steps.len());
    let mut k = 0;
    while k < steps.len() {
        if let Some(run) = disjunction_run(steps, k, edges, nodes) {
            out.push(run.0);
            k += run.1;
            continue;
        }
        out.push(match steps[k] {
            Step::Match => EditAction::Match,
            Step::Delete => EditAction::Delete,
            Step::Insert(j) => EditAction::Insert(emit_for(&edges[j - 1], nodes)),
            Step::Substitute(j) => EditAction::Substitute(emit_for(&edges[j - 1], nodes)),
        });
        k += 1;
    }
    out
}

fn disjunction_run(steps: &[Step], start: usize, edges: &[Edge], nodes: &HashMap<usize, &PatternNode>) -> Option<(EditAction, usize)> {
    let edge_of = |s: Step| match s {
        Step::Insert(j) | Step::Substitute(j) => Some(&edges[j - 1]),
        _ => None,
    };
    let first = edge_of(steps[start])?;
    let (alt, 0) = first.origin.alt? else {
        return None;
    };
    let Some(PatternNode::Disjunction(alts)) = nodes.get(&first.origin.node) else {
        return None;
    };
    let len = alts[alt as usize].chars().count();
    let mut consumed = 0;
    for pos in 0..len {
        let s = *steps.get(start + pos)?;
        let e = edge_of(s)?;
        if e.origin.node != first.origin.node || e.origin.copy != first.origin.copy || e.origin.alt != Some((alt, pos as u32)) {
            return None;
        }
        consumed += matches!(s, Step::Substitute(_)) as usize;
    }
    let alternatives: Vec<String> = alts.iter().filter(|a| a.chars().count() == len).cloned().collect();
    let emit = if alternatives.len() == 1 {
        Emit::Text(alternatives[0].clone())
    } else {
        Emit::Disjunction {
            alternatives,
            slot: slot(first),
        }
    };
    Some((EditAction::Choose { consumed, emit }, len))
}

/// All minimal (possibly abstract) edit programs taking `value` into the
/// DAG's language, best first by the tie-break order, at most `max_programs`.
pub fn min_edit_programs(dag: &UnrolledDag, value: &str, max_programs: usize) -> Vec<EditProgram> {
    min_edit_programs_for(dag, value, max_programs, PatternId(0))
}

pub fn min_edit_programs_for(dag: &UnrolledDag, value: &str, max_programs: usize, pattern: PatternId) -> Vec<EditProgram> {
    let chars: Vec<char> = value.chars().collect();
    let dp = fill(dag, &chars);
    let ends = accepting_columns(dag);
    let Some(target) = ends.iter().map(|&j| dp.cost(chars.len(), j)).min() else {
        return Vec::new();
    };
    let nodes = node_table(dag.graph.root());
    let mut seen = HashSet::new();
    let mut programs = Vec::new();
    for steps in backtrack(&dp, dag, &chars, &ends, target) {
        let actions = to_actions(&steps, dag, &nodes);
        if seen.insert(actions.clone()) {
            programs.push(EditProgram::new(actions, pattern));
        }
    }
    programs.sort_by(|a, b| a.tie_break_cmp(b, &chars));
    programs.truncate(max_programs);
    programs
}
