//! Level 1: swarm rules over ideal spiders, Compile, minimal models and the
//! precompile / deprecompile maps between swarms and green graphs.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::greengraph::{has_12_pattern, l2_tgds, GreenGraph, Label2, RuleL2};
use crate::labgraph::{A, B};
use crate::relcore::Color;
use crate::rewrite::{important_edges as important, saturate, PairTgd, Saturator};
use crate::spider::{
    apply_spider_algebra, binary_query, spider_query, BinaryQuery, IdealSpider, LabelUniverse,
    Mode, SpiderError, Swarm,
};

/// The `(I, J)` index of a spider query `f^I_J`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpiderSpec {
    pub upper: Option<u32>,
    pub lower: Option<u32>,
}

impl fmt::Display for SpiderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = |x: Option<u32>| x.map_or(String::new(), |v| v.to_string());
        write!(f, "f[{}|{}]", s(self.upper), s(self.lower))
    }
}

/// `f ⩚̇ f'` (shared target) or `f ⩛̇ f'` (shared source).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RuleL1 {
    pub left: SpiderSpec,
    pub right: SpiderSpec,
    pub mode: Mode,
}

impl fmt::Display for RuleL1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}̇ {}", self.left, self.mode.symbol(), self.right)
    }
}

impl RuleL1 {
    pub fn new(left: SpiderSpec, right: SpiderSpec, mode: Mode) -> Self {
        RuleL1 { left, right, mode }
    }

    /// The green-to-red TGD, then the red-to-green one.
    pub fn tgds(&self, name: &str) -> [PairTgd<IdealSpider>; 2] {
        let (l, r) = (self.left, self.right);
        let one = |color: Color, tag: &str| PairTgd {
            id: format!("{name}{tag}"),
            mode: self.mode,
            first: Box::new(move |s: IdealSpider| {
                s.color == color && apply_spider_algebra(l.upper, l.lower, s).is_ok()
            }),
            produce: Box::new(move |s1: IdealSpider, s2: IdealSpider| {
                if s1.color != color || s2.color != color {
                    return None;
                }
                let p1 = apply_spider_algebra(l.upper, l.lower, s1).ok()?;
                let p2 = apply_spider_algebra(r.upper, r.lower, s2).ok()?;
                Some((p1, p2))
            }),
        };
        [one(Color::Green, " G->R"), one(Color::Red, " R->G")]
    }

    pub fn codes(&self) -> impl Iterator<Item = u32> {
        [self.left.upper, self.left.lower, self.right.upper, self.right.lower]
            .into_iter()
            .flatten()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SwarmError {
    #[error(transparent)]
    Spider(#[from] SpiderError),
    #[error("the swarm or graph lacks its seed edge")]
    MissingSeed,
    #[error("the green graph is not a minimal model: {0} edge(s) are not important")]
    NotMinimal(usize),
    #[error("the green graph violates a rule: {0}")]
    NotAModel(String),
    #[error("the green graph contains a 1-2 pattern")]
    HasPattern,
}

/// Rule `k` unfolds to TGDs `2k` (G→R) and `2k+1` (R→G).
pub fn l1_tgds(rules: &[RuleL1]) -> Vec<PairTgd<IdealSpider>> {
    rules
        .iter()
        .enumerate()
        .flat_map(|(i, r)| r.tgds(&format!("p{i}")))
        .collect()
}

pub fn seed_swarm() -> Swarm {
    let mut m = Swarm::new();
    m.add_edge(IdealSpider::full(Color::Green), A, B);
    m
}

pub fn saturate_swarm(rules: &[RuleL1], m: &Swarm, budget: usize) -> (Swarm, bool) {
    saturate(&l1_tgds(rules), m, budget)
}

/// The staged driver, for callers that need the per-stage log.
pub fn swarm_saturator<'a>(tgds: &'a [PairTgd<IdealSpider>], m: &Swarm) -> Saturator<'a, IdealSpider> {
    Saturator::new(tgds, m.clone())
}

pub fn compile_rules(rules: &[RuleL1], universe: LabelUniverse) -> Result<Vec<BinaryQuery>, SpiderError> {
    rules
        .iter()
        .map(|r| {
            let f = spider_query(universe, r.left.upper, r.left.lower)?;
            let g = spider_query(universe, r.right.upper, r.right.lower)?;
            Ok(binary_query(&f, &g, r.mode))
        })
        .collect()
}

/// `(name, query)` pairs ready for `chase::tgds_of_queries`.
pub fn compiled_queries(
    rules: &[RuleL1],
    universe: LabelUniverse,
) -> Result<Vec<(String, crate::relcore::ConjunctiveQuery)>, SpiderError> {
    Ok(compile_rules(rules, universe)?
        .into_iter()
        .enumerate()
        .map(|(i, q)| (format!("p{i}"), q.canonical))
        .collect())
}

pub fn max_code(rules: &[RuleL1]) -> u32 {
    rules.iter().flat_map(|r| r.codes()).max().unwrap_or(0).max(4)
}

pub fn has_red_spider(m: &Swarm) -> bool {
    !m.with_label(IdealSpider::full(Color::Red)).is_empty()
}

pub fn has_green_spider(m: &Swarm) -> bool {
    !m.with_label(IdealSpider::full(Color::Green)).is_empty()
}

/// Important edges of a swarm with respect to `rules`, from the seed.
pub fn important_swarm_edges(m: &Swarm, rules: &[RuleL1]) -> Result<BTreeSet<u32>, SwarmError> {
    let seed = seed_index(m, IdealSpider::full(Color::Green))?;
    Ok(important(&l1_tgds(rules), m, seed))
}

/// Important edges of a green graph with respect to `rules`, from the seed.
pub fn important_green_edges(g: &GreenGraph, rules: &[RuleL2]) -> Result<BTreeSet<u32>, SwarmError> {
    let seed = seed_index(g, None)?;
    Ok(important(&l2_tgds(rules), g, seed))
}

fn seed_index<L: Copy + Eq + std::hash::Hash + Ord>(
    g: &crate::labgraph::LabeledGraph<L>,
    label: L,
) -> Result<u32, SwarmError> {
    g.with_label_src(label, A)
        .iter()
        .copied()
        .find(|&i| g.edge(i).dst == B)
        .ok_or(SwarmError::MissingSeed)
}

/// Green graph edge as a green swarm edge: `H_∅ ↦ Sp_G`, `H_i ↦ Sp_G^{i}`.
pub fn green_to_spider(l: Label2) -> IdealSpider {
    IdealSpider::green(l, None)
}

/// Green edges of `g` plus one stage of `Precompile(t2)`.  `g` must be a
/// minimal model of `t2` without a 1-2 pattern.
pub fn precompile_map(g: &GreenGraph, t2: &[RuleL2]) -> Result<Swarm, SwarmError> {
    let imp = important_green_edges(g, t2)?;
    let unreachable = g.num_edges() - imp.len();
    if unreachable > 0 {
        return Err(SwarmError::NotMinimal(unreachable));
    }
    let tg = l2_tgds(t2);
    if let Some((i, _)) = crate::rewrite::violations(&tg, g).first() {
        return Err(SwarmError::NotAModel(tg[*i].id.clone()));
    }
    if has_12_pattern(g).is_some() {
        return Err(SwarmError::HasPattern);
    }
    Ok(precompile_unchecked(g, t2))
}

/// The map itself, without precondition checks.
pub fn precompile_unchecked(g: &GreenGraph, t2: &[RuleL2]) -> Swarm {
    let m = g.map_edges(|e| Some(green_to_spider(e.label)));
    let rules = crate::greengraph::precompile_rules(t2);
    let tgds = l1_tgds(&rules);
    let mut s = Saturator::new(&tgds, m);
    s.stage();
    s.graph
}

/// Keeps the full and upper 1-lame green edges as green graph edges.
pub fn deprecompile_map(m: &Swarm) -> GreenGraph {
    m.map_edges(|e| {
        let sp = e.label;
        (sp.color == Color::Green && sp.lower.is_none()).then_some(sp.upper)
    })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct SwarmEdgeJson {
    pub label: IdealSpider,
    pub src: String,
    pub dst: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct SwarmJson {
    pub edges: Vec<SwarmEdgeJson>,
}

pub fn to_json(m: &Swarm) -> SwarmJson {
    SwarmJson {
        edges: m
            .edges()
            .iter()
            .map(|e| SwarmEdgeJson {
                label: e.label,
                src: m.name(e.src).to_string(),
                dst: m.name(e.dst).to_string(),
            })
            .collect(),
    }
}

pub fn from_json(j: &SwarmJson) -> Swarm {
    let mut m = Swarm::new();
    for e in &j.edges {
        m.add_named(e.label, &e.src, &e.dst);
    }
    m
}

pub fn to_dot(m: &Swarm) -> String {
    let mut s = String::from("digraph swarm {\n  rankdir=LR;\n");
    for v in m.vertices() {
        s.push_str(&format!("  \"{}\";\n", m.name(v)));
    }
    for e in m.edges() {
        let color = match e.label.color {
            Color::Green => "darkgreen",
            Color::Red => "red",
        };
        s.push_str(&format!(
            "  \"{}\" -> \"{}\" [label=\"{}\", color={color}];\n",
            m.name(e.src),
            m.name(e.dst),
            e.label
        ));
    }
    s.push_str("}\n");
    s
}
