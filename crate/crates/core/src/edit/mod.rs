//! Minimal edit programs that take a value into a pattern's language.
//!
//! A pattern is compiled to an ε-free automaton ([`nfa::Nfa`]), unrolled into
//! a DAG sized for the erroneous value ([`nfa::unroll`]), and searched with a
//! dynamic program over (symbols consumed, edge) ([`dp`]). Programs may be
//! abstract: an insert or substitute can emit a whole character class or a
//! disjunction, to be resolved later by the concretizer.

pub mod dp;
pub mod nfa;
pub mod program;

pub use dp::{fill, match_path, min_cost, min_edit_programs, min_edit_programs_for, DpMatrices, Move};
pub use nfa::{unroll, Label, Nfa, UnrolledDag};
pub use program::{apply, apply_partial, EditAction, EditProgram, Emit, SlotKey};

use crate::profiler::Pattern;

pub const DEFAULT_MAX_PROGRAMS: usize = 10;

/// Compiles the automaton of a pattern.
pub fn compile_nfa(pattern: &Pattern) -> Nfa {
    pattern.nfa().clone()
}

/// Minimal programs for `value` against `pattern`, retrying once with one
/// more copy per repeated group when the first unroll yields nothing.
pub fn repair_programs(pattern: &Pattern, value: &str, max_programs: usize) -> (UnrolledDag, Vec<EditProgram>) {
    let len = value.chars().count();
    let dag = unroll(pattern.nfa(), len);
    let programs = min_edit_programs_for(&dag, value, max_programs, pattern.id);
    if !programs.is_empty() || !pattern.root.has_cycle() {
        return (dag, programs);
    }
    let deeper = nfa::unroll_with_extra(pattern.nfa(), len, 1);
    let programs = min_edit_programs_for(&deeper, value, max_programs, pattern.id);
    (deeper, programs)
}
