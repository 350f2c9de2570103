//! Automata over pattern symbols.
//!
//! Both the cyclic automaton and its unrolled DAG are built without
//! ε-transitions: every edge consumes exactly one symbol and all edges into a
//! state carry the same label. States are numbered in creation order, which
//! for the unrolled DAG is a topological order.

use std::collections::VecDeque;

use crate::profiler::{CharClass, PatternNode, Quantifier};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Symbol(char),
    Class(CharClass),
}

impl Label {
    pub fn accepts(self, c: char) -> bool {
        match self {
            Label::Symbol(s) => s == c,
            Label::Class(k) => k.contains(c),
        }
    }
}

/// Where an edge came from in the pattern: the preorder index of the leaf
/// (or disjunction) node, the unroll copy path of enclosing repeated groups,
/// and for disjunctions the alternative and character position.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Origin {
    pub node: usize,
    pub copy: Vec<u32>,
    pub alt: Option<(u32, u32)>,
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub label: Label,
    pub origin: Origin,
}

#[derive(Debug, Clone)]
pub struct Nfa {
    pub state_count: usize,
    pub accepting: Vec<bool>,
    pub edges: Vec<Edge>,
    out: Vec<Vec<usize>>,
    root: PatternNode,
}

pub const START: usize = 0;

/// Number of copies made of one repeated group while unrolling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnrollDepth {
    pub node: usize,
    pub copy: Vec<u32>,
    pub cycle_len: usize,
    pub depth: usize,
}

#[derive(Debug, Clone)]
pub struct UnrolledDag {
    pub graph: Nfa,
    pub value_len: usize,
    pub depths: Vec<UnrollDepth>,
}

enum Mode {
    Cyclic,
    Unroll { value_len: usize, extra: usize },
}

struct Builder {
    state_count: usize,
    edges: Vec<Edge>,
    mode: Mode,
    copy: Vec<u32>,
    depths: Vec<UnrollDepth>,
}

impl Builder {
    fn new_state(&mut self) -> usize {
        self.state_count += 1;
        self.state_count - 1
    }

    fn symbol(&mut self, entries: &[usize], label: Label, origin: Origin) -> Vec<usize> {
        let s = self.new_state();
        for &e in entries {
            self.edges.push(Edge {
                from: e,
                to: s,
                label,
                origin: origin.clone(),
            });
        }
        vec![s]
    }

    fn origin(&self, node: usize, alt: Option<(u32, u32)>) -> Origin {
        Origin {
            node,
            copy: self.copy.clone(),
            alt,
        }
    }

    fn children(&mut self, children: &[PatternNode], id: usize, entries: &[usize]) -> Vec<usize> {
        let mut cur = entries.to_vec();
        let mut child_id = id + 1;
        for c in children {
            cur = self.build(c, child_id, &cur);
            child_id += c.node_count();
        }
        cur
    }

    fn build(&mut self, node: &PatternNode, id: usize, entries: &[usize]) -> Vec<usize> {
        match node {
            PatternNode::Literal(c) => {
                let o = self.origin(id, None);
                self.symbol(entries, Label::Symbol(*c), o)
            }
            PatternNode::Mask(m) => {
                let o = self.origin(id, None);
                self.symbol(entries, Label::Symbol(m.symbol), o)
            }
            PatternNode::Class(k) => {
                let o = self.origin(id, None);
                self.symbol(entries, Label::Class(*k), o)
            }
            PatternNode::Disjunction(alts) => {
                let mut exits = Vec::new();
                for (ai, alt) in alts.iter().enumerate() {
                    let mut cur = entries.to_vec();
                    for (pi, c) in alt.chars().enumerate() {
                        let o = self.origin(id, Some((ai as u32, pi as u32)));
                        cur = self.symbol(&cur, Label::Symbol(c), o);
                    }
                    exits.extend(cur);
                }
                exits
            }
            PatternNode::Sequence(children) | PatternNode::Group(children, Quantifier::Once) => self.children(children, id, entries),
            PatternNode::Group(children, Quantifier::OneOrMore) => match self.mode {
                Mode::Cyclic => {
                    let first_edge = self.edges.len();
                    let exits = self.children(children, id, entries);
                    let firsts: Vec<Edge> = self.edges[first_edge..]
                        .iter()
                        .filter(|e| entries.contains(&e.from))
                        .cloned()
                        .collect();
                    for &x in &exits {
                        for f in &firsts {
                            self.edges.push(Edge { from: x, ..f.clone() });
                        }
                    }
                    exits
                }
                Mode::Unroll { value_len, extra } => {
                    let cycle_len = children.iter().map(PatternNode::min_len).sum::<usize>().max(1);
                    let depth = value_len.div_ceil(cycle_len).max(1) + extra;
                    self.depths.push(UnrollDepth {
                        node: id,
                        copy: self.copy.clone(),
                        cycle_len,
                        depth,
                    });
                    let mut cur = entries.to_vec();
                    let mut exits = Vec::new();
                    for c in 0..depth {
                        self.copy.push(c as u32);
                        cur = self.children(children, id, &cur);
                        self.copy.pop();
                        exits.extend_from_slice(&cur);
                    }
                    exits.sort_unstable();
                    exits.dedup();
                    exits
                }
            },
        }
    }

    fn finish(self, exits: Vec<usize>, root: &PatternNode) -> (Nfa, Vec<UnrollDepth>) {
        let mut accepting = vec![false; self.state_count];
        for x in exits {
            accepting[x] = true;
        }
        let mut out = vec![Vec::new(); self.state_count];
        for (i, e) in self.edges.iter().enumerate() {
            out[e.from].push(i);
        }
        (
            Nfa {
                state_count: self.state_count,
                accepting,
                edges: self.edges,
                out,
                root: root.clone(),
            },
            self.depths,
        )
    }
}

impl Nfa {
    /// Compiles a pattern into an ε-free automaton; `+` groups become cycles.
    pub fn compile(root: &PatternNode) -> Self {
        let mut b = Builder {
            state_count: 1,
            edges: Vec::new(),
            mode: Mode::Cyclic,
            copy: Vec::new(),
            depths: Vec::new(),
        };
        let exits = b.build(root, 0, &[START]);
        b.finish(exits, root).0
    }

    pub fn root(&self) -> &PatternNode {
        &self.root
    }

    pub fn outgoing(&self, state: usize) -> &[usize] {
        &self.out[state]
    }

    pub fn accepts(&self, value: &str) -> bool {
        let mut cur = vec![false; self.state_count];
        let mut active = vec![START];
        cur[START] = true;
        for c in value.chars() {
            let mut next = vec![false; self.state_count];
            let mut next_active = Vec::new();
            for &s in &active {
                for &ei in &self.out[s] {
                    let e = &self.edges[ei];
                    if !next[e.to] && e.label.accepts(c) {
                        next[e.to] = true;
                        next_active.push(e.to);
                    }
                }
            }
            if next_active.is_empty() {
                return false;
            }
            cur = next;
            active = next_active;
        }
        active.iter().any(|&s| self.accepting[s] && cur[s])
    }

    pub fn is_acyclic(&self) -> bool {
        self.edges.iter().all(|e| e.from < e.to)
    }

    /// Length (in edges) of the shortest cycle through each edge that lies on
    /// one.
    pub fn cycle_lengths(&self) -> Vec<usize> {
        let mut lengths = Vec::new();
        for e in &self.edges {
            let mut dist = vec![usize::MAX; self.state_count];
            let mut queue = VecDeque::from([e.to]);
            dist[e.to] = 0;
            while let Some(s) = queue.pop_front() {
                if s == e.from {
                    lengths.push(dist[s] + 1);
                    break;
                }
                for &ei in &self.out[s] {
                    let t = self.edges[ei].to;
                    if dist[t] == usize::MAX {
                        dist[t] = dist[s] + 1;
                        queue.push_back(t);
                    }
                }
            }
        }
        lengths
    }
}

/// Approximates the automaton for a value of `value_len` symbols by a DAG in
/// which every repeated group is copied `ceil(value_len / cycle_len)` times,
/// recursively for nested groups.
pub fn unroll(nfa: &Nfa, value_len: usize) -> UnrolledDag {
    unroll_with_extra(nfa, value_len, 0)
}

/// [`unroll`] with `extra` additional copies per repeated group.
pub fn unroll_with_extra(nfa: &Nfa, value_len: usize, extra: usize) -> UnrolledDag {
    let mut b = Builder {
        state_count: 1,
        edges: Vec::new(),
        mode: Mode::Unroll { value_len, extra },
        copy: Vec::new(),
        depths: Vec::new(),
    };
    let exits = b.build(&nfa.root, 0, &[START]);
    let (graph, depths) = b.finish(exits, &nfa.root);
    UnrolledDag { graph, value_len, depths }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiler::Pattern;

    fn nfa(src: &str) -> Nfa {
        Pattern::parse(src).unwrap().nfa().clone()
    }

    #[test]
    fn repeated_group_is_three_edge_cycle() {
        let n = nfa("(A[0-9].)+");
        assert_eq!(n.state_count, 4);
        assert_eq!(n.edges.len(), 4);
        assert!(!n.is_acyclic());
        let cycles = n.cycle_lengths();
        assert!(!cycles.is_empty());
        assert!(cycles.iter().all(|&c| c == 3));
    }

    #[test]
    fn single_literal() {
        let n = nfa("x");
        assert_eq!(n.state_count, 2);
        assert_eq!(n.edges.len(), 1);
        assert!(n.accepting[1]);
    }

    #[test]
    fn disjunction_branches() {
        let n = nfa("(a|bb)");
        assert_eq!(n.state_count, 4);
        assert_eq!(n.edges.len(), 3);
        assert_eq!(n.outgoing(START).len(), 2);
        assert!(n.accepts("a") && n.accepts("bb"));
        assert_eq!(n.accepting.iter().filter(|a| **a).count(), 2);
    }

    #[test]
    fn unroll_depths() {
        let n = nfa("(A[0-9].)+");
        let dag = unroll(&n, 4);
        assert_eq!(dag.depths.len(), 1);
        assert_eq!(dag.depths[0].depth, 2);
        assert_eq!(dag.depths[0].cycle_len, 3);
        assert!(dag.graph.is_acyclic());
        assert!(dag.graph.accepts("A1.A2."));
        assert!(!dag.graph.accepts("A1.A2.A3."));

        let digits = unroll(&nfa("[0-9]+"), 5);
        assert_eq!(digits.depths[0].depth, 5);
        assert_eq!(digits.graph.edges.len(), 5);
    }

    #[test]
    fn acyclic_pattern_unrolls_to_same_graph() {
        let n = nfa("ab(c|de)");
        let dag = unroll(&n, 7);
        assert_eq!(dag.graph.state_count, n.state_count);
        assert_eq!(dag.graph.edges.len(), n.edges.len());
        assert!(dag.depths.is_empty());
    }

    #[test]
    fn nested_groups_unroll_recursively() {
        let n = nfa("((ab)+c)+");
        let dag = unroll(&n, 6);
        // outer cycle has min length 3 -> 2 copies, inner min length 2 -> 3 copies each
        let outer: Vec<_> = dag.depths.iter().filter(|d| d.copy.is_empty()).collect();
        assert_eq!(outer.len(), 1);
        assert_eq!(outer[0].depth, 2);
        let inner: Vec<_> = dag.depths.iter().filter(|d| d.copy.len() == 1).collect();
        assert_eq!(inner.len(), 2);
        assert!(inner.iter().all(|d| d.depth == 3));
        assert!(dag.graph.accepts("ababcabc"));
        assert!(!dag.graph.accepts("abababababc"));
    }
}
