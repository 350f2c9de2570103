//! Small decision trees predicting the concrete value of an abstract slot.
//!
//! Trees are searched exhaustively in ascending (nodes, depth) order: a
//! single leaf, one split, a split with one further split below it, and a
//! full tree of depth two. The first shape whose best tree reaches the
//! accuracy threshold on the training examples wins; within a shape the most
//! accurate tree wins and ties go to the feature that comes first.

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use super::features::{Bitset, FeatureMatrix, Predicate};

/// Features kept for the search, ranked by mutual information with labels.
pub const MAX_FEATURES: usize = 200;

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingExample {
    pub row: usize,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf(String),
    Split {
        feature: usize,
        predicate: Predicate,
        yes: Box<TreeNode>,
        no: Box<TreeNode>,
    },
}

impl TreeNode {
    fn predict<'a>(&'a self, features: &FeatureMatrix, row: usize) -> &'a str {
        match self {
            TreeNode::Leaf(l) => l,
            TreeNode::Split { feature, yes, no, .. } => {
                if features.values[*feature].contains(row) {
                    yes.predict(features, row)
                } else {
                    no.predict(features, row)
                }
            }
        }
    }

    pub fn leaves(&self) -> Vec<&str> {
        match self {
            TreeNode::Leaf(l) => vec![l.as_str()],
            TreeNode::Split { yes, no, .. } => {
                let mut v = yes.leaves();
                v.extend(no.leaves());
                v
            }
        }
    }
}

impl Serialize for TreeNode {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            TreeNode::Leaf(l) => {
                let mut m = s.serialize_map(Some(1))?;
                m.serialize_entry("leaf", l)?;
                m.end()
            }
            TreeNode::Split { predicate, yes, no, .. } => {
                let mut m = s.serialize_map(Some(3))?;
                m.serialize_entry("predicate", predicate)?;
                m.serialize_entry("true_branch", yes)?;
                m.serialize_entry("false_branch", no)?;
                m.end()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintTree {
    pub root: TreeNode,
    pub accuracy: f64,
    pub nodes: usize,
    pub depth: usize,
}

impl ConstraintTree {
    pub fn predict<'a>(&'a self, features: &FeatureMatrix, row: usize) -> &'a str {
        self.root.predict(features, row)
    }
}

struct Search<'a> {
    fm: &'a FeatureMatrix,
    m: usize,
    labels: Vec<String>,
    label_sets: Vec<Bitset>,
    /// (feature index in the matrix, truth values over the examples)
    features: Vec<(usize, Bitset)>,
    all: Bitset,
}

/// Best single-leaf prediction for a subset: (correct, label index).
fn majority(label_sets: &[Bitset], subset: &Bitset) -> (usize, usize) {
    let mut best = (0, 0);
    for (k, l) in label_sets.iter().enumerate() {
        let c = l.count_and(subset);
        if c > best.0 {
            best = (c, k);
        }
    }
    best
}

struct Split {
    correct: usize,
    feature: usize,
    yes_label: usize,
    no_label: usize,
}

impl Search<'_> {
    fn leaf(&self, k: usize) -> TreeNode {
        TreeNode::Leaf(self.labels[k].clone())
    }

    fn split_node(&self, s: &Split) -> TreeNode {
        let (fi, _) = &self.features[s.feature];
        TreeNode::Split {
            feature: *fi,
            predicate: self.fm.predicates[*fi].clone(),
            yes: Box::new(self.leaf(s.yes_label)),
            no: Box::new(self.leaf(s.no_label)),
        }
    }

    fn wrap(&self, f: usize, yes: TreeNode, no: TreeNode) -> TreeNode {
        let fi = self.features[f].0;
        TreeNode::Split {
            feature: fi,
            predicate: self.fm.predicates[fi].clone(),
            yes: Box::new(yes),
            no: Box::new(no),
        }
    }

    /// Best one-split tree on `subset`, considering only splits that
    /// separate it.
    fn best_split(&self, subset: &Bitset, skip: Option<usize>) -> Option<Split> {
        let n = subset.count();
        let mut best: Option<Split> = None;
        for (g, (_, bits)) in self.features.iter().enumerate() {
            if Some(g) == skip {
                continue;
            }
            let yes_n = bits.count_and(subset);
            if yes_n == 0 || yes_n == n {
                continue;
            }
            let (mut yes_best, mut no_best) = ((0, 0), (0, 0));
            for (k, l) in self.label_sets.iter().enumerate() {
                let y = l.count_and3(subset, bits);
                let total = l.count_and(subset);
                if y > yes_best.0 {
                    yes_best = (y, k);
                }
                if total - y > no_best.0 {
                    no_best = (total - y, k);
                }
            }
            let correct = yes_best.0 + no_best.0;
            if best.as_ref().is_none_or(|b| correct > b.correct) {
                best = Some(Split {
                    correct,
                    feature: g,
                    yes_label: yes_best.1,
                    no_label: no_best.1,
                });
            }
        }
        best
    }

    fn tree(&self, root: TreeNode, correct: usize, nodes: usize, depth: usize) -> ConstraintTree {
        ConstraintTree {
            root,
            accuracy: correct as f64 / self.m as f64,
            nodes,
            depth,
        }
    }

    fn run(&self, alpha: f64) -> Option<ConstraintTree> {
        let need = |c: usize| c as f64 / self.m as f64 + EPS >= alpha;

        let (c, k) = majority(&self.label_sets, &self.all);
        if need(c) {
            return Some(self.tree(self.leaf(k), c, 1, 0));
        }

        let one = self.best_split(&self.all, None)?;
        if need(one.correct) {
            return Some(self.tree(self.split_node(&one), one.correct, 3, 1));
        }

        // Per root feature: majority and best split of each side.
        struct Sides {
            yes_leaf: (usize, usize),
            no_leaf: (usize, usize),
            yes_split: Option<Split>,
            no_split: Option<Split>,
        }
        let mut sides = Vec::with_capacity(self.features.len());
        for (f, (_, bits)) in self.features.iter().enumerate() {
            let yes = bits.and(&self.all);
            let no = self.all.and_not(bits);
            sides.push(Sides {
                yes_leaf: majority(&self.label_sets, &yes),
                no_leaf: majority(&self.label_sets, &no),
                yes_split: self.best_split(&yes, Some(f)),
                no_split: self.best_split(&no, Some(f)),
            });
        }

        let mut best5: Option<(usize, usize, bool)> = None;
        for (f, s) in sides.iter().enumerate() {
            if let Some(ys) = &s.yes_split {
                let c = ys.correct + s.no_leaf.0;
                if best5.is_none_or(|b| c > b.0) {
                    best5 = Some((c, f, true));
                }
            }
            if let Some(ns) = &s.no_split {
                let c = s.yes_leaf.0 + ns.correct;
                if best5.is_none_or(|b| c > b.0) {
                    best5 = Some((c, f, false));
                }
            }
        }
        if let Some((c, f, split_yes)) = best5 {
            if need(c) {
                let s = &sides[f];
                let root = if split_yes {
                    self.wrap(f, self.split_node(s.yes_split.as_ref().unwrap()), self.leaf(s.no_leaf.1))
                } else {
                    self.wrap(f, self.leaf(s.yes_leaf.1), self.split_node(s.no_split.as_ref().unwrap()))
                };
                return Some(self.tree(root, c, 5, 2));
            }
        }

        let mut best7: Option<(usize, usize)> = None;
        for (f, s) in sides.iter().enumerate() {
            if let (Some(ys), Some(ns)) = (&s.yes_split, &s.no_split) {
                let c = ys.correct + ns.correct;
                if best7.is_none_or(|b| c > b.0) {
                    best7 = Some((c, f));
                }
            }
        }
        let (c, f) = best7?;
        if !need(c) {
            return None;
        }
        let s = &sides[f];
        let root = self.wrap(
            f,
            self.split_node(s.yes_split.as_ref().unwrap()),
            self.split_node(s.no_split.as_ref().unwrap()),
        );
        Some(self.tree(root, c, 7, 2))
    }
}

fn mutual_information(bits: &Bitset, label_sets: &[Bitset], m: usize) -> f64 {
    let m = m as f64;
    let n1 = bits.count() as f64;
    let n0 = m - n1;
    let mut mi = 0.0;
    for l in label_sets {
        let ny = l.count() as f64;
        let n1y = l.count_and(bits) as f64;
        let n0y = ny - n1y;
        for (nfy, nf) in [(n1y, n1), (n0y, n0)] {
            if nfy > 0.0 {
                mi += nfy / m * ((nfy * m) / (nf * ny)).ln();
            }
        }
    }
    mi
}

/// Learns the smallest tree (by nodes, then depth) reaching accuracy `alpha`
/// on the examples, or `None` if no tree up to seven nodes does.
pub fn learn_tree(features: &FeatureMatrix, examples: &[TrainingExample], alpha: f64) -> Option<ConstraintTree> {
    let m = examples.len();
    if m < 2 {
        return None;
    }
    let mut labels: Vec<String> = examples.iter().map(|e| e.label.clone()).collect();
    labels.sort();
    labels.dedup();
    let label_sets: Vec<Bitset> = labels.iter().map(|l| Bitset::from_fn(m, |i| &examples[i].label == l)).collect();

    let mut candidates: Vec<(usize, Bitset, f64)> = Vec::new();
    for (fi, values) in features.values.iter().enumerate() {
        let bits = Bitset::from_fn(m, |i| values.contains(examples[i].row));
        let n = bits.count();
        if n == 0 || n == m {
            continue;
        }
        let mi = mutual_information(&bits, &label_sets, m);
        candidates.push((fi, bits, mi));
    }
    if candidates.len() > MAX_FEATURES {
        let mut ranked: Vec<usize> = (0..candidates.len()).collect();
        ranked.sort_by(|&a, &b| candidates[b].2.total_cmp(&candidates[a].2).then(a.cmp(&b)));
        let mut keep = vec![false; candidates.len()];
        for &i in &ranked[..MAX_FEATURES] {
            keep[i] = true;
        }
        let mut i = 0;
        candidates.retain(|_| {
            i += 1;
            keep[i - 1]
        });
    }

    let search = Search {
        fm: features,
        m,
        labels,
        label_sets,
        features: candidates.into_iter().map(|(fi, b, _)| (fi, b)).collect(),
        all: Bitset::from_fn(m, |_| true),
    };
    search.run(alpha)
}
