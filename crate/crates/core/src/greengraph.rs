//! Level 2: green graphs, their biconditional rewriting rules, Precompile,
//! the 1-2 pattern, parity glasses and word extraction.
//!
//! A green graph label is `Some(code)` for `H_code` and `None` for `H_∅`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labgraph::{LabeledGraph, Vertex, A, B};
use crate::rewrite::{saturate, PairTgd};
use crate::spider::{is_even, Mode};
use crate::swarm::{RuleL1, SpiderSpec};

pub type Label2 = Option<u32>;
pub type GreenGraph = LabeledGraph<Label2>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GreenGraphError {
    #[error("the graph has no seed edge H_∅(a,b)")]
    MissingSeed,
    #[error("rule {0} is malformed: {1}")]
    BadRule(String, String),
}

/// `I1 ⊙ I2 ⇄ I3 ⊙ I4` with `⊙` the double-dotted wedge or vee.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RuleL2 {
    pub i1: Label2,
    pub i2: Label2,
    pub i3: Label2,
    pub i4: Label2,
    pub mode: Mode,
}

fn lab(l: Label2) -> String {
    l.map_or("∅".to_string(), |c| c.to_string())
}

impl fmt::Display for RuleL2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.mode {
            Mode::Wedge => "⩚̈",
            Mode::Vee => "⩛̈",
        };
        write!(
            f,
            "{} {op} {} ⇄ {} {op} {}",
            lab(self.i1),
            lab(self.i2),
            lab(self.i3),
            lab(self.i4)
        )
    }
}

impl RuleL2 {
    pub fn wedge(i1: Label2, i2: Label2, i3: Label2, i4: Label2) -> Self {
        RuleL2 { i1, i2, i3, i4, mode: Mode::Wedge }
    }

    pub fn vee(i1: Label2, i2: Label2, i3: Label2, i4: Label2) -> Self {
        RuleL2 { i1, i2, i3, i4, mode: Mode::Vee }
    }

    pub fn validate(&self) -> Result<(), GreenGraphError> {
        if self.i1 == self.i3 || self.i2 == self.i4 {
            return Err(GreenGraphError::BadRule(
                self.to_string(),
                "both sides must differ position-wise".into(),
            ));
        }
        for l in [self.i1, self.i2, self.i3, self.i4] {
            if matches!(l, Some(3) | Some(4)) {
                return Err(GreenGraphError::BadRule(self.to_string(), "codes 3 and 4 are reserved".into()));
            }
        }
        Ok(())
    }

    /// The two TGDs of the biconditional: left-to-right, then right-to-left.
    pub fn tgds(&self, name: &str) -> [PairTgd<Label2>; 2] {
        let one = |from: (Label2, Label2), to: (Label2, Label2), tag: &str| PairTgd {
            id: format!("{name}{tag}"),
            mode: self.mode,
            first: Box::new(move |l| l == from.0),
            produce: Box::new(move |l1, l2| (l1 == from.0 && l2 == from.1).then_some(to)),
        };
        [
            one((self.i1, self.i2), (self.i3, self.i4), "→"),
            one((self.i3, self.i4), (self.i1, self.i2), "←"),
        ]
    }
}

pub fn l2_tgds(rules: &[RuleL2]) -> Vec<PairTgd<Label2>> {
    rules
        .iter()
        .enumerate()
        .flat_map(|(i, r)| r.tgds(&format!("r{i}")))
        .collect()
}

/// `{H_∅(a,b)}`.
pub fn seed_graph() -> GreenGraph {
    let mut g = GreenGraph::new();
    g.add_edge(None, A, B);
    g
}

pub fn has_seed(g: &GreenGraph) -> bool {
    g.has_edge(None, A, B)
}

pub fn saturate_greengraph(rules: &[RuleL2], g: &GreenGraph, budget: usize) -> (GreenGraph, bool) {
    saturate(&l2_tgds(rules), g, budget)
}

/// Precompile with the green graph rules numbered `first, first+1, ...`
/// (the standard numbering starts at 2): the base triple plus, for rule
/// number `i`, the pair over lower codes `2i+1`, `2i+2`.
pub fn precompile_rules_from(rules: &[RuleL2], first: u32) -> Vec<RuleL1> {
    let sp = |upper: Option<u32>, lower: Option<u32>| SpiderSpec { upper, lower };
    let mut out = vec![
        RuleL1::new(sp(Some(1), Some(1)), sp(Some(2), Some(2)), Mode::Wedge),
        RuleL1::new(sp(Some(3), Some(1)), sp(Some(4), Some(2)), Mode::Wedge),
        RuleL1::new(sp(Some(3), None), sp(Some(4), Some(3)), Mode::Wedge),
    ];
    for (k, r) in rules.iter().enumerate() {
        let i = first + k as u32;
        let (c1, c2) = (Some(2 * i + 1), Some(2 * i + 2));
        out.push(RuleL1::new(sp(r.i1, c1), sp(r.i2, c2), r.mode));
        out.push(RuleL1::new(sp(r.i3, c1), sp(r.i4, c2), r.mode));
    }
    out
}

pub fn precompile_rules(rules: &[RuleL2]) -> Vec<RuleL1> {
    precompile_rules_from(rules, 2)
}

/// Largest code used by a precompiled rule set (at least 4).
pub fn max_code_l1(rules: &[RuleL1]) -> u32 {
    rules
        .iter()
        .flat_map(|r| [r.left.upper, r.left.lower, r.right.upper, r.right.lower])
        .flatten()
        .max()
        .unwrap_or(0)
        .max(4)
}

/// Some `(a, a', b)` with `H_1(a,b)` and `H_2(a',b)`.
pub fn has_12_pattern(g: &GreenGraph) -> Option<(Vertex, Vertex, Vertex)> {
    for &i in g.with_label(Some(1)) {
        let e = g.edge(i);
        if let Some(&j) = g.with_label_dst(Some(2), e.dst).first() {
            return Some((e.src, g.edge(j).src, e.dst));
        }
    }
    None
}

/// Drops `H_∅` edges and reverses odd-labelled ones.
pub fn parity_glasses(g: &GreenGraph) -> Result<LabeledGraph<u32>, GreenGraphError> {
    if !has_seed(g) {
        return Err(GreenGraphError::MissingSeed);
    }
    let mut pg = LabeledGraph::new();
    for v in g.vertices() {
        pg.add_vertex(g.name(v));
    }
    for e in g.edges() {
        if let Some(c) = e.label {
            if is_even(c) {
                pg.add_edge(c, e.src, e.dst);
            } else {
                pg.add_edge(c, e.dst, e.src);
            }
        }
    }
    Ok(pg)
}

/// `paths(PG, a, a) ∪ paths(PG, a, b)` restricted to words of length at
/// most `bound`, read jointly: a word is kept when some run from `a` ends in
/// `a` or `b` and no nonempty proper prefix has such a run.  Reading the two
/// prefix conditions separately would also admit words that pass through
/// `a` on their way to `b` (`α η1 α β1 η0` in the path chase), which the
/// infinite-path example excludes.
pub fn words(g: &GreenGraph, bound: usize) -> Result<BTreeSet<Vec<u32>>, GreenGraphError> {
    let pg = parity_glasses(g)?;
    Ok(prefix_free_runs(&pg, A, &[A, B], bound))
}

/// `paths(pg, s, t)` up to length `bound`, for a single target.
pub fn paths(pg: &LabeledGraph<u32>, s: Vertex, t: Vertex, bound: usize) -> BTreeSet<Vec<u32>> {
    prefix_free_runs(pg, s, &[t], bound)
}

/// Words whose run set (subset construction from `s`) first meets
/// `targets` at their last letter.
pub fn prefix_free_runs(
    pg: &LabeledGraph<u32>,
    s: Vertex,
    targets: &[Vertex],
    bound: usize,
) -> BTreeSet<Vec<u32>> {
    let mut out = BTreeSet::new();
    let mut stack: Vec<(BTreeSet<Vertex>, Vec<u32>)> = vec![([s].into_iter().collect(), Vec::new())];
    while let Some((states, word)) = stack.pop() {
        if word.len() >= bound {
            continue;
        }
        let mut next: BTreeMap<u32, BTreeSet<Vertex>> = BTreeMap::new();
        for &v in &states {
            for &i in pg.out_edges(v) {
                let e = pg.edge(i);
                next.entry(e.label).or_default().insert(e.dst);
            }
        }
        for (label, succ) in next {
            let mut w = word.clone();
            w.push(label);
            if targets.iter().any(|t| succ.contains(t)) {
                out.insert(w);
            } else {
                stack.push((succ, w));
            }
        }
    }
    out
}

/// Membership in `α(β1 β0)*`.
pub fn is_alpha_beta_word(w: &[u32], alpha: u32, beta0: u32, beta1: u32) -> bool {
    match w.split_first() {
        Some((&first, rest)) if first == alpha && rest.len() % 2 == 0 => rest
            .chunks(2)
            .all(|pair| pair[0] == beta1 && pair[1] == beta0),
        _ => false,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct GreenEdgeJson {
    pub label: Option<u32>,
    pub src: String,
    pub dst: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct GreenGraphJson {
    pub edges: Vec<GreenEdgeJson>,
}

pub fn to_json(g: &GreenGraph) -> GreenGraphJson {
    GreenGraphJson {
        edges: g
            .edges()
            .iter()
            .map(|e| GreenEdgeJson {
                label: e.label,
                src: g.name(e.src).to_string(),
                dst: g.name(e.dst).to_string(),
            })
            .collect(),
    }
}

pub fn from_json(j: &GreenGraphJson) -> GreenGraph {
    let mut g = GreenGraph::new();
    for e in &j.edges {
        g.add_named(e.label, &e.src, &e.dst);
    }
    g
}

/// DOT rendering; `names` maps codes to symbols where known.
pub fn to_dot(g: &GreenGraph, names: &BTreeMap<u32, String>) -> String {
    let mut s = String::from("digraph green {\n  rankdir=LR;\n");
    for v in g.vertices() {
        s.push_str(&format!("  \"{}\";\n", g.name(v)));
    }
    for e in g.edges() {
        let label = match e.label {
            None => "∅".to_string(),
            Some(c) => names.get(&c).cloned().unwrap_or_else(|| c.to_string()),
        };
        s.push_str(&format!(
            "  \"{}\" -> \"{}\" [label=\"{}\"];\n",
            g.name(e.src),
            g.name(e.dst),
            label
        ));
    }
    s.push_str("}\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_needs_shared_target() {
        let mut g = GreenGraph::new();
        g.add_named(Some(1), "a", "b");
        g.add_named(Some(2), "x", "b");
        assert!(has_12_pattern(&g).is_some());
        let mut g = GreenGraph::new();
        g.add_named(Some(1), "a", "b");
        g.add_named(Some(2), "b", "c");
        assert!(has_12_pattern(&g).is_none());
        let mut g = GreenGraph::new();
        g.add_named(Some(1), "a", "b");
        g.add_named(Some(2), "a", "b");
        assert!(has_12_pattern(&g).is_some());
    }

    #[test]
    fn parity_glasses_orientation() {
        let mut g = seed_graph();
        g.add_named(Some(6), "a", "b1");
        g.add_named(Some(9), "a", "b1");
        let pg = parity_glasses(&g).unwrap();
        assert_eq!(pg.num_edges(), 2);
        assert!(pg.has_named(6, "a", "b1"));
        assert!(pg.has_named(9, "b1", "a"));
        assert!(parity_glasses(&GreenGraph::new()).is_err());
    }

    #[test]
    fn seed_only_has_no_words() {
        assert!(words(&seed_graph(), 10).unwrap().is_empty());
    }

    #[test]
    fn precompile_counts() {
        let r = RuleL2::wedge(None, None, Some(6), Some(7));
        assert_eq!(precompile_rules(&[]).len(), 3);
        let p = precompile_rules(&[r, r]);
        assert_eq!(p.len(), 7);
        assert_eq!(p[3].left.lower, Some(5));
        assert_eq!(p[6].right.lower, Some(8));
    }

    #[test]
    fn alpha_beta_scanner() {
        assert!(is_alpha_beta_word(&[6], 6, 8, 5));
        assert!(is_alpha_beta_word(&[6, 5, 8, 5, 8], 6, 8, 5));
        assert!(!is_alpha_beta_word(&[6, 5], 6, 8, 5));
        assert!(!is_alpha_beta_word(&[], 6, 8, 5));
    }
}
