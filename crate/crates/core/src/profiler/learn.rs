//! Pattern learning.
//!
//! Values are tokenized into runs of upper-case letters, lower-case letters,
//! digits and spaces; every other symbol (punctuation, mask tokens) is its own
//! token. Values with the same token-kind signature form a group, values whose
//! signatures repeat a common delimited unit a varying number of times are
//! folded into one repeated group, and within large groups rare token values
//! or lengths are isolated into groups of their own. Groups are then merged
//! greedily while a merge lowers the description cost. Groups whose
//! signatures differ only inside alphanumeric stretches (`#3A0F1B` against
//! `#D21C99`) may also merge in a coarser view where each such stretch is a
//! single token. Merges are accepted while they lower the description cost
//!
//! ```text
//! cost = NODE_BITS * size(patterns) + lambda * bits(values | patterns)
//! ```
//!
//! where `bits` counts the choices a pattern leaves open for each value
//! (characters drawn from a class, the alternative of a disjunction, run
//! lengths and repetition counts) plus the choice of pattern. If more than
//! `k` groups remain, the two lightest are merged repeatedly, falling back to
//! a literal disjunction of whole values when they are not compatible.

use std::collections::{BTreeMap, HashMap};

use crate::alphabet;
use crate::semantics::SemanticTypeList;

use super::{coverage_weighted, CharClass, MaskToken, Pattern, PatternId, PatternNode, Quantifier};

const NODE_BITS: f64 = 8.0;
const MAX_DISJUNCTION: usize = 5;
const MIN_SPLIT_WEIGHT: usize = 10;
const DOMINANT_SHARE: f64 = 0.9;
const MAX_DOMINANT_LENGTHS: usize = 2;
const BINARY_MIN_CHARS: usize = 10;
const SWALLOW_SAMPLE: usize = 3;

#[derive(Debug, Clone)]
pub struct LearnOptions {
    /// Maximum number of patterns.
    pub k: usize,
    /// Weight of the data-encoding term of the cost.
    pub lambda: f64,
    /// Isolate rare token values and lengths of large groups.
    pub isolate_outliers: bool,
    /// Semantic type names, indexed by mask symbol.
    pub types: SemanticTypeList,
}

impl Default for LearnOptions {
    fn default() -> Self {
        Self {
            k: 6,
            lambda: 1.0,
            isolate_outliers: true,
            types: SemanticTypeList::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Kind {
    Upper,
    Lower,
    Letter,
    Digit,
    Alnum,
    Space,
    Sym(char),
}

impl Kind {
    fn of(c: char) -> Kind {
        if c.is_ascii_uppercase() {
            Kind::Upper
        } else if c.is_ascii_lowercase() {
            Kind::Lower
        } else if c.is_ascii_digit() {
            Kind::Digit
        } else if c == ' ' || c == '\t' {
            Kind::Space
        } else {
            Kind::Sym(c)
        }
    }

    fn is_run(self) -> bool {
        !matches!(self, Kind::Sym(_))
    }

    fn is_alnum(self) -> bool {
        matches!(self, Kind::Upper | Kind::Lower | Kind::Letter | Kind::Digit | Kind::Alnum)
    }

    fn join(self, other: Kind) -> Option<Kind> {
        if self == other {
            return Some(self);
        }
        if !(self.is_alnum() && other.is_alnum()) {
            return None;
        }
        let letters = |k: Kind| matches!(k, Kind::Upper | Kind::Lower | Kind::Letter);
        Some(if letters(self) && letters(other) {
            Kind::Letter
        } else {
            Kind::Alnum
        })
    }
}

fn tokenize(value: &str) -> Vec<(Kind, String)> {
    let mut out: Vec<(Kind, String)> = Vec::new();
    for c in value.chars() {
        let k = Kind::of(c);
        match out.last_mut() {
            Some((last, text)) if *last == k && k.is_run() => text.push(c),
            _ => out.push((k, c.to_string())),
        }
    }
    out
}

fn coarse_unit(unit: &[Kind]) -> Vec<Kind> {
    let mut out: Vec<Kind> = Vec::new();
    for &k in unit {
        match out.last_mut() {
            Some(last) if last.is_alnum() && k.is_alnum() => *last = last.join(k).expect("alphanumeric kinds join"),
            _ => out.push(k),
        }
    }
    out
}

/// Smallest unit containing a delimiter whose repetition gives `kinds`.
#[allow(clippy::manual_is_multiple_of)] // is_multiple_of is newer than rust-version
fn repeated_unit(kinds: &[Kind]) -> Option<usize> {
    let n = kinds.len();
    (1..n)
        .filter(|u| n % u == 0)
        .find(|&u| kinds[..u].iter().any(|k| matches!(k, Kind::Sym(_) | Kind::Space)) && kinds.chunks(u).all(|c| c == &kinds[..u]))
}

/// Tokens of the coarse view: consecutive alphanumeric runs form one token.
fn coarsen(tokens: &[(Kind, String)]) -> Vec<(Kind, String)> {
    let mut out: Vec<(Kind, String)> = Vec::new();
    for (k, t) in tokens {
        match out.last_mut() {
            Some((last, text)) if last.is_alnum() && k.is_alnum() => {
                *last = last.join(*k).expect("alphanumeric kinds join");
                text.push_str(t);
            }
            _ => out.push((*k, t.clone())),
        }
    }
    out
}

struct Distinct {
    value: String,
    weight: usize,
    kinds: Vec<Kind>,
    texts: Vec<String>,
    coarse_texts: Vec<String>,
}

#[derive(Debug, Clone)]
struct Group {
    unit: Vec<Kind>,
    rep: bool,
    /// Positions index the coarse tokens of members.
    coarse: bool,
    residue: bool,
    isolated: bool,
    members: Vec<usize>,
}

#[derive(Debug, Clone)]
struct Fit {
    node: PatternNode,
    cost: f64,
    text: String,
}

fn log2(x: f64) -> f64 {
    x.log2()
}

fn narrowest_class(chars: impl Iterator<Item = char>) -> CharClass {
    let (mut upper, mut lower, mut digit, mut binary, mut n) = (false, false, false, true, 0);
    for c in chars {
        n += 1;
        upper |= c.is_ascii_uppercase();
        lower |= c.is_ascii_lowercase();
        digit |= c.is_ascii_digit();
        binary &= c == '0' || c == '1';
    }
    match (upper, lower, digit) {
        (false, false, true) if binary && n >= BINARY_MIN_CHARS => CharClass::Binary,
        (false, false, _) => CharClass::Digit,
        (true, false, false) => CharClass::Upper,
        (false, true, false) => CharClass::Lower,
        (true, true, false) => CharClass::Letter,
        _ => CharClass::Alnum,
    }
}

struct Learner<'a> {
    distinct: &'a [Distinct],
    types: &'a SemanticTypeList,
    total: f64,
    lambda: f64,
}

impl Learner<'_> {
    fn weight(&self, g: &Group) -> usize {
        g.members.iter().map(|&m| self.distinct[m].weight).sum()
    }

    fn choice_bits(&self, w: usize) -> f64 {
        if w == 0 {
            0.0
        } else {
            w as f64 * log2(self.total / w as f64)
        }
    }

    fn symbol(&self, c: char) -> PatternNode {
        match alphabet::mask_index(c) {
            Some(i) => PatternNode::Mask(MaskToken {
                symbol: c,
                name: self.types.names().get(i).cloned().unwrap_or_else(|| format!("m{}", i + 1)),
            }),
            None => PatternNode::Literal(c),
        }
    }

    fn cost(&self, size: f64, bits: f64) -> f64 {
        size * NODE_BITS + self.lambda * bits
    }

    /// Nodes, size and bits for one token position given its samples.
    fn position(&self, samples: &BTreeMap<&str, usize>) -> (Vec<PatternNode>, f64, f64) {
        if samples.len() == 1 {
            let text = *samples.keys().next().unwrap();
            let nodes = text.chars().map(|c| self.symbol(c)).collect();
            return (nodes, text.chars().count() as f64, 0.0);
        }
        let w: usize = samples.values().sum();
        let all_space = samples.keys().all(|t| t.chars().all(|c| c == ' ' || c == '\t'));
        let class = if all_space {
            CharClass::Space
        } else {
            narrowest_class(samples.keys().flat_map(|t| t.chars()))
        };
        let lengths: Vec<usize> = samples.keys().map(|t| t.chars().count()).collect();
        let fixed = lengths.iter().all(|&l| l == lengths[0]);
        let per_char = log2(class.size() as f64);
        let (class_nodes, class_size, class_bits) = if fixed {
            let len = lengths[0];
            (vec![PatternNode::Class(class); len], len as f64, w as f64 * len as f64 * per_char)
        } else {
            let bits = samples
                .iter()
                .map(|(t, &c)| c as f64 * (t.chars().count() as f64 * per_char + 1.0))
                .sum();
            (
                vec![PatternNode::Group(vec![PatternNode::Class(class)], Quantifier::OneOrMore)],
                2.0,
                bits,
            )
        };
        let d = samples.len();
        if !all_space && d <= MAX_DISJUNCTION && samples.values().all(|&c| c >= 2) && d * 3 <= w {
            let size: f64 = samples.keys().map(|t| t.chars().count() as f64).sum();
            let bits = w as f64 * log2(d as f64);
            if self.cost(size, bits) <= self.cost(class_size, class_bits) {
                let alts = samples.keys().map(|t| t.to_string()).collect();
                return (vec![PatternNode::Disjunction(alts)], size, bits);
            }
        }
        (class_nodes, class_size, class_bits)
    }

    fn fit(&self, g: &Group) -> Fit {
        let (node, cost) = if g.residue {
            let mut alts: Vec<String> = g.members.iter().map(|&m| self.distinct[m].value.clone()).collect();
            alts.sort();
            let size: f64 = alts.iter().map(|a| a.chars().count() as f64).sum();
            let bits = self.weight(g) as f64 * log2(alts.len() as f64);
            (PatternNode::Sequence(vec![PatternNode::Disjunction(alts)]), self.cost(size, bits))
        } else {
            self.fit_structured(g)
        };
        Fit {
            text: node.to_string(),
            node,
            cost,
        }
    }

    fn fit_structured(&self, g: &Group) -> (PatternNode, f64) {
        let u = g.unit.len();
        let mut children = Vec::new();
        let (mut size, mut bits) = (0.0, 0.0);
        for p in 0..u {
            let mut samples: BTreeMap<&str, usize> = BTreeMap::new();
            for &m in &g.members {
                let d = &self.distinct[m];
                let texts = if g.coarse { &d.coarse_texts } else { &d.texts };
                for c in 0..texts.len() / u {
                    *samples.entry(texts[c * u + p].as_str()).or_default() += d.weight;
                }
            }
            let (nodes, s, b) = self.position(&samples);
            children.extend(nodes);
            size += s;
            bits += b;
        }
        if g.rep {
            size += 1.0;
            for &m in &g.members {
                let d = &self.distinct[m];
                let r = (d.texts.len() / u) as f64;
                bits += d.weight as f64 * (1.0 + log2(r));
            }
            let node = PatternNode::Sequence(vec![PatternNode::Group(children, Quantifier::OneOrMore)]);
            return (node, self.cost(size, bits));
        }
        let structured = (PatternNode::Sequence(children), self.cost(size, bits));

        // A handful of frequent whole values may be cheaper as a disjunction.
        let d = g.members.len();
        let w = self.weight(g);
        let eligible = (2..=MAX_DISJUNCTION).contains(&d) && d * 3 <= w && g.members.iter().all(|&m| self.distinct[m].weight >= 2);
        if eligible {
            let mut alts: Vec<String> = g.members.iter().map(|&m| self.distinct[m].value.clone()).collect();
            alts.sort();
            let size: f64 = alts.iter().map(|a| a.chars().count() as f64).sum();
            let cost = self.cost(size, w as f64 * log2(d as f64));
            if cost <= structured.1 {
                return (PatternNode::Sequence(vec![PatternNode::Disjunction(alts)]), cost);
            }
        }
        structured
    }

    fn merge(&self, a: &Group, b: &Group) -> Option<Group> {
        if a.residue || b.residue || a.unit.is_empty() || b.unit.is_empty() {
            return None;
        }
        let joined = |x: &[Kind], y: &[Kind]| -> Option<Vec<Kind>> {
            if x.len() != y.len() {
                return None;
            }
            x.iter().zip(y).map(|(p, q)| p.join(*q)).collect()
        };
        let mut members: Vec<usize> = a.members.iter().chain(&b.members).copied().collect();
        members.sort_unstable();
        if a.coarse == b.coarse {
            if let Some(unit) = joined(&a.unit, &b.unit) {
                return Some(Group {
                    unit,
                    rep: a.rep || b.rep,
                    coarse: a.coarse,
                    residue: false,
                    isolated: a.isolated && b.isolated,
                    members,
                });
            }
        }
        // Coarse merges are driven by recurring shapes, not single values.
        if a.rep || b.rep || self.weight(a) < 2 || self.weight(b) < 2 {
            return None;
        }
        let unit = joined(&coarse_unit(&a.unit), &coarse_unit(&b.unit))?;
        Some(Group {
            unit,
            rep: false,
            coarse: true,
            residue: false,
            isolated: a.isolated && b.isolated,
            members,
        })
    }

    fn residue(&self, a: &Group, b: &Group) -> Group {
        let mut members: Vec<usize> = a.members.iter().chain(&b.members).copied().collect();
        members.sort_unstable();
        Group {
            unit: Vec::new(),
            rep: false,
            coarse: false,
            residue: true,
            isolated: true,
            members,
        }
    }

    /// Splits members whose token at some position is rare in a large group.
    fn isolate(&self, g: Group) -> Vec<Group> {
        if g.rep || g.coarse || g.residue || self.weight(&g) < MIN_SPLIT_WEIGHT {
            return vec![g];
        }
        let mut main = g;
        let mut outliers: Vec<usize> = Vec::new();
        for p in 0..main.unit.len() {
            let kind = main.unit[p];
            if !kind.is_alnum() {
                continue;
            }
            let by_value = |m: usize| self.distinct[m].texts[p].clone();
            let by_len = |m: usize| self.distinct[m].texts[p].chars().count().to_string();
            let mut rules: Vec<(&dyn Fn(usize) -> String, usize)> = vec![(&by_len, MAX_DOMINANT_LENGTHS)];
            if matches!(kind, Kind::Upper | Kind::Lower) {
                rules.push((&by_value, MAX_DISJUNCTION));
            }
            for (key, limit) in rules {
                if let Some(rare) = self.rare_members(&main, key, limit) {
                    main.members.retain(|m| !rare.contains(m));
                    outliers.extend(rare);
                }
            }
        }
        // Each outlier starts alone so that no pattern is fitted to the
        // outliers as a whole before the swallowing check can see it.
        outliers.sort_unstable();
        let mut out = vec![main.clone()];
        out.extend(outliers.into_iter().map(|m| Group {
            isolated: true,
            members: vec![m],
            ..main.clone()
        }));
        out
    }

    fn rare_members(&self, g: &Group, key: &dyn Fn(usize) -> String, limit: usize) -> Option<Vec<usize>> {
        let w = self.weight(g);
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for &m in &g.members {
            *counts.entry(key(m)).or_default() += self.distinct[m].weight;
        }
        if counts.len() < 2 {
            return None;
        }
        let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut covered = 0;
        let mut dominant = 0;
        while dominant < ranked.len() && (covered as f64) < DOMINANT_SHARE * w as f64 {
            covered += ranked[dominant].1;
            dominant += 1;
        }
        if dominant > limit || dominant == ranked.len() || ranked[..dominant].iter().any(|(_, c)| *c < 2) {
            return None;
        }
        let keep: Vec<&String> = ranked[..dominant].iter().map(|(k, _)| k).collect();
        Some(g.members.iter().copied().filter(|&m| !keep.contains(&&key(m))).collect())
    }
}

fn initial_groups(distinct: &[Distinct]) -> Vec<Group> {
    let mut by_sig: Vec<(Vec<Kind>, Vec<usize>)> = Vec::new();
    let mut index: HashMap<Vec<Kind>, usize> = HashMap::new();
    for (i, d) in distinct.iter().enumerate() {
        let slot = *index.entry(d.kinds.clone()).or_insert_with(|| {
            by_sig.push((d.kinds.clone(), Vec::new()));
            by_sig.len() - 1
        });
        by_sig[slot].1.push(i);
    }

    // Fold signatures that repeat one unit a varying number of times.
    let unit_of = |kinds: &[Kind]| repeated_unit(kinds).map_or(kinds.to_vec(), |u| kinds[..u].to_vec());
    let mut repeats: HashMap<Vec<Kind>, Vec<usize>> = HashMap::new();
    for (kinds, _) in &by_sig {
        let unit = unit_of(kinds);
        let r = if unit.is_empty() { 0 } else { kinds.len() / unit.len() };
        repeats.entry(unit).or_default().push(r);
    }
    let mut groups: Vec<Group> = Vec::new();
    let mut folded: HashMap<Vec<Kind>, usize> = HashMap::new();
    for (kinds, members) in by_sig {
        let unit = unit_of(&kinds);
        let counts = &repeats[&unit];
        let fold = !unit.is_empty() && counts.iter().any(|&r| r != counts[0]);
        if fold {
            match folded.get(&unit) {
                Some(&g) => {
                    groups[g].members.extend(members);
                    groups[g].members.sort_unstable();
                }
                None => {
                    folded.insert(unit.clone(), groups.len());
                    groups.push(Group {
                        unit,
                        rep: true,
                        coarse: false,
                        residue: false,
                        isolated: false,
                        members,
                    });
                }
            }
        } else {
            groups.push(Group {
                unit: kinds,
                rep: false,
                coarse: false,
                residue: false,
                isolated: false,
                members,
            });
        }
    }
    groups
}

/// Learns at most `k` patterns (see [`learn_patterns_with`]), plus one for
/// the empty string when the column contains it and `k` is exhausted.
pub fn learn_patterns(values: &[String], k: usize) -> Vec<Pattern> {
    learn_patterns_with(
        values,
        &LearnOptions {
            k,
            ..LearnOptions::default()
        },
    )
}

/// Learns patterns covering every value. Patterns are returned by descending
/// coverage (ties by syntax) with ids `p0, p1, ...` in that order.
pub fn learn_patterns_with(values: &[String], options: &LearnOptions) -> Vec<Pattern> {
    if values.is_empty() {
        return Vec::new();
    }
    let mut distinct: Vec<Distinct> = Vec::new();
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for v in values {
        match seen.get(v.as_str()) {
            Some(&i) => distinct[i].weight += 1,
            None => {
                seen.insert(v, distinct.len());
                let tokens = tokenize(v);
                distinct.push(Distinct {
                    value: v.clone(),
                    weight: 1,
                    coarse_texts: coarsen(&tokens).into_iter().map(|t| t.1).collect(),
                    kinds: tokens.iter().map(|t| t.0).collect(),
                    texts: tokens.into_iter().map(|t| t.1).collect(),
                });
            }
        }
    }
    let learner = Learner {
        distinct: &distinct,
        types: &options.types,
        total: values.len() as f64,
        lambda: options.lambda,
    };

    let mut groups: Vec<Group> = initial_groups(&distinct);
    if options.isolate_outliers {
        groups = groups.into_iter().flat_map(|g| learner.isolate(g)).collect();
    }
    let mut groups: Vec<Option<(Group, Fit)>> = groups
        .into_iter()
        .map(|g| {
            let f = learner.fit(&g);
            Some((g, f))
        })
        .collect();

    improving_merges(&learner, &mut groups);
    forced_merges(&learner, &mut groups, options.k.max(1));

    let mut patterns: Vec<Pattern> = Vec::new();
    for (_, fit) in groups.into_iter().flatten() {
        if patterns.iter().any(|p| p.syntax() == fit.text) {
            continue;
        }
        let mut p = Pattern::new(PatternId(0), fit.node).expect("learned pattern is well formed");
        p.coverage = coverage_weighted(&p, distinct.iter().map(|d| (d.value.as_str(), d.weight)), values.len());
        patterns.push(p);
    }
    patterns.sort_by(|a, b| b.coverage.total_cmp(&a.coverage).then_with(|| a.syntax().cmp(&b.syntax())));
    for (i, p) in patterns.iter_mut().enumerate() {
        p.id = PatternId(i as u32);
    }
    patterns
}

type Slot = Option<(Group, Fit)>;

/// A candidate merge: the live groups it consumes and the result.
struct Merge {
    parts: Vec<usize>,
    delta: f64,
    group: Group,
    fit: Fit,
    /// Compiled merged pattern, when absorption was checked.
    pattern: Option<Pattern>,
}

fn accepts_group(learner: &Learner<'_>, pattern: &Pattern, g: &Group) -> bool {
    g.members
        .iter()
        .take(SWALLOW_SAMPLE)
        .any(|&m| pattern.matches(&learner.distinct[m].value))
}

/// Merges groups `i` and `j`. A merged pattern that also accepts values of
/// other live groups absorbs those groups as well, so patterns never overlap
/// a group they were not fitted to.
fn plan_merge(learner: &Learner<'_>, groups: &[Slot], i: usize, j: usize, forced: bool) -> Option<Merge> {
    let (a, b) = (groups[i].as_ref()?, groups[j].as_ref()?);
    let mut parts = vec![i, j];
    let mut group = learner.merge(&a.0, &b.0)?;
    let delta_of = |parts: &[usize], fit: &Fit| {
        let weights: Vec<usize> = parts.iter().map(|&k| learner.weight(&groups[k].as_ref().unwrap().0)).collect();
        let before: f64 = parts.iter().map(|&k| groups[k].as_ref().unwrap().1.cost).sum();
        let choice = learner.choice_bits(weights.iter().sum()) - weights.iter().map(|&w| learner.choice_bits(w)).sum::<f64>();
        fit.cost - before + learner.lambda * choice
    };
    loop {
        let fit = learner.fit(&group);
        let delta = delta_of(&parts, &fit);
        // A pair that does not pay off on its own is not pursued further.
        if !forced && parts.len() == 2 && delta >= 0.0 {
            return Some(Merge {
                parts,
                delta,
                group,
                fit,
                pattern: None,
            });
        }
        let pattern = Pattern::new(PatternId(0), fit.node.clone()).ok()?;
        let extra: Vec<usize> = groups
            .iter()
            .enumerate()
            .filter(|(k, slot)| !parts.contains(k) && slot.as_ref().is_some_and(|(g, _)| accepts_group(learner, &pattern, g)))
            .map(|(k, _)| k)
            .collect();
        if extra.is_empty() {
            return Some(Merge {
                parts,
                delta,
                group,
                fit,
                pattern: Some(pattern),
            });
        }
        for k in extra {
            let other = &groups[k].as_ref().unwrap().0;
            // Isolated outliers rejoin the majority only through a coarse
            // merge or when merging is forced.
            let rejoin = other.isolated && !group.isolated && group.coarse;
            if other.residue || (!forced && other.isolated != group.isolated && !rejoin) {
                return None;
            }
            // A forced merge of light groups never generalizes over the
            // group holding most of the column; it becomes a disjunction.
            if forced && 2 * learner.weight(other) > learner.total as usize {
                return None;
            }
            group = learner.merge(&group, other)?;
            parts.push(k);
        }
    }
}

fn apply_merge(groups: &mut Vec<Slot>, m: Merge) {
    for &k in &m.parts {
        groups[k] = None;
    }
    groups.push(Some((m.group, m.fit)));
}

fn improving_merges(learner: &Learner<'_>, groups: &mut Vec<Slot>) {
    let allowed = |a: &Group, b: &Group| a.isolated == b.isolated && !a.residue && !b.residue;
    let mut cache: HashMap<(usize, usize), Option<Merge>> = HashMap::new();
    loop {
        let live: Vec<usize> = (0..groups.len()).filter(|&i| groups[i].is_some()).collect();
        let mut best: Option<((usize, usize), f64, String)> = None;
        for (x, &i) in live.iter().enumerate() {
            for &j in &live[x + 1..] {
                let (a, b) = (groups[i].as_ref().unwrap(), groups[j].as_ref().unwrap());
                if !allowed(&a.0, &b.0) {
                    continue;
                }
                let entry = cache.entry((i, j)).or_insert_with(|| plan_merge(learner, groups, i, j, false));
                let Some(m) = entry else { continue };
                if m.delta >= -1e-9 {
                    continue;
                }
                let better = best
                    .as_ref()
                    .is_none_or(|(_, bd, bt)| m.delta < bd - 1e-9 || ((m.delta - bd).abs() <= 1e-9 && m.fit.text < *bt));
                if better {
                    best = Some(((i, j), m.delta, m.fit.text.clone()));
                }
            }
        }
        let Some(((i, j), _, _)) = best else { break };
        let m = cache.remove(&(i, j)).flatten().unwrap();
        let removed = m.parts.clone();
        apply_merge(groups, m);
        let new = groups.len() - 1;
        let added = &groups[new].as_ref().unwrap().0;
        // Plans touching consumed groups, or whose pattern would now absorb
        // the new group, are stale.
        cache.retain(|&(a, b), plan| {
            !removed.contains(&a)
                && !removed.contains(&b)
                && plan.as_ref().is_none_or(|p| {
                    !p.parts.iter().any(|k| removed.contains(k))
                        && !p.pattern.as_ref().is_some_and(|pat| accepts_group(learner, pat, added))
                })
        });
    }
}

/// Folds `i` and `j` into a literal disjunction of their values.
fn plan_residue(learner: &Learner<'_>, groups: &[Slot], i: usize, j: usize) -> Option<Merge> {
    let (a, b) = (groups[i].as_ref()?, groups[j].as_ref()?);
    let group = learner.residue(&a.0, &b.0);
    let fit = learner.fit(&group);
    let (wa, wb) = (learner.weight(&a.0), learner.weight(&b.0));
    let choice = learner.choice_bits(wa + wb) - learner.choice_bits(wa) - learner.choice_bits(wb);
    Some(Merge {
        parts: vec![i, j],
        delta: fit.cost - a.1.cost - b.1.cost + learner.lambda * choice,
        group,
        fit,
        pattern: None,
    })
}

/// While more than `k` groups remain, the lightest group is merged with the
/// partner that raises the cost least, structurally or as a disjunction.
fn forced_merges(learner: &Learner<'_>, groups: &mut Vec<Slot>, k: usize) {
    loop {
        let mut live: Vec<usize> = (0..groups.len())
            .filter(|&i| groups[i].as_ref().is_some_and(|(g, _)| g.residue || !g.unit.is_empty()))
            .collect();
        if live.len() <= k {
            break;
        }
        live.sort_by(|&a, &b| {
            let (ga, fa) = groups[a].as_ref().unwrap();
            let (gb, fb) = groups[b].as_ref().unwrap();
            learner.weight(ga).cmp(&learner.weight(gb)).then_with(|| fa.text.cmp(&fb.text))
        });
        let i = live[0];
        let mut best: Option<Merge> = None;
        for &j in &live[1..] {
            for m in [plan_merge(learner, groups, i, j, true), plan_residue(learner, groups, i, j)]
                .into_iter()
                .flatten()
            {
                if best.as_ref().is_none_or(|b| m.delta < b.delta - 1e-9) {
                    best = Some(m);
                }
            }
        }
        apply_merge(groups, best.expect("residue merge always exists"));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::mask_symbol;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn syntaxes(ps: &[Pattern]) -> Vec<String> {
        ps.iter().map(Pattern::syntax).collect()
    }

    #[test]
    fn tokenizer_runs() {
        let t = tokenize("Ab12-x  y");
        let kinds: Vec<Kind> = t.iter().map(|t| t.0).collect();
        assert_eq!(
            kinds,
            vec![
                Kind::Upper,
                Kind::Lower,
                Kind::Digit,
                Kind::Sym('-'),
                Kind::Lower,
                Kind::Space,
                Kind::Lower
            ]
        );
        assert_eq!(t[5].1, "  ");
    }

    #[test]
    fn repeated_group_is_folded() {
        let ps = learn_patterns(&strings(&["A2.A3.", "A5.A7.", "A1.", "A9.A2.A5.", "AAA3"]), 6);
        assert_eq!(syntaxes(&ps), vec!["(A[0-9].)+", "AAA3"]);
        assert!((ps[0].coverage - 0.8).abs() < 1e-12);
        assert!((ps[1].coverage - 0.2).abs() < 1e-12);
    }

    #[test]
    fn singleton_is_literal() {
        let ps = learn_patterns(&strings(&["x"]), 6);
        assert_eq!(syntaxes(&ps), vec!["x"]);
        assert_eq!(ps[0].coverage, 1.0);
    }

    #[test]
    fn masked_colors() {
        let m = mask_symbol(16);
        let vals = vec![format!("{m} 1"), format!("{m} 2")];
        let ps = learn_patterns(&vals, 6);
        assert_eq!(syntaxes(&ps), vec!["{color} [0-9]"]);
    }

    #[test]
    fn frequent_alternatives_become_disjunction() {
        let mut vals = Vec::new();
        for (i, s) in ["PRO", "JUN", "PRO", "JUN", "PRO", "JUN", "PRO"].iter().enumerate() {
            vals.push(format!("X-{}{}{}-{s}", i + 1, i + 3, (i * 7) % 10));
        }
        let ps = learn_patterns(&vals, 6);
        assert_eq!(syntaxes(&ps), vec!["X-[0-9][0-9][0-9]-(JUN|PRO)"]);
    }

    #[test]
    fn rare_lengths_are_isolated() {
        let mut vals: Vec<String> = (0..19).map(|i| format!("ID-{:03}", i * 37 % 1000)).collect();
        vals.push("ID-0451".into());
        let ps = learn_patterns(&vals, 6);
        assert_eq!(ps[0].syntax(), "ID-[0-9][0-9][0-9]");
        assert!(!ps[0].matches("ID-0451"));
    }

    #[test]
    fn k_bounds_result() {
        let vals = strings(&["a", "1", "-", "a-1", "1-a", "--", "a b", "x.y", "Q", "?"]);
        for k in 1..5 {
            let ps = learn_patterns(&vals, k);
            assert!(ps.len() <= k, "k={k}: {:?}", syntaxes(&ps));
            assert!(vals.iter().all(|v| ps.iter().any(|p| p.matches(v))));
        }
    }

    #[test]
    fn empty_string_gets_its_own_pattern() {
        let ps = learn_patterns(&strings(&["", "a1", "b2"]), 6);
        assert!(ps.iter().any(|p| p.matches("")));
        assert!(ps.iter().any(|p| p.matches("a1")));
    }
}
