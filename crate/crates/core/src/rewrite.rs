//! Staged lazy saturation for two-edge rewriting rules on labelled graphs.
//!
//! Every swarm rule and every green graph rule unfolds into TGDs of one
//! shape: two body edges sharing an endpoint force two head edges that
//! share a fresh endpoint, while the other two endpoints are carried over.
//!
//! * `Mode::Wedge`: `L1(x,y) ∧ L2(x',y) ⇒ ∃y' P1(x,y') ∧ P2(x',y')`
//! * `Mode::Vee`:   `L1(x,y) ∧ L2(x,y') ⇒ ∃x' P1(x',y) ∧ P2(x',y')`
//!
//! The produced labels `P1, P2` are a function of the matched labels.

use std::collections::{BTreeSet, HashSet};
use std::hash::Hash;

use serde::Serialize;

use crate::labgraph::{LabeledGraph, Vertex};
use crate::spider::Mode;

pub type Produce<L> = Box<dyn Fn(L, L) -> Option<(L, L)> + Send + Sync>;

/// One TGD of the two-edge shape.
pub struct PairTgd<L> {
    pub id: String,
    pub mode: Mode,
    /// Cheap pre-filter for the first body label.
    pub first: Box<dyn Fn(L) -> bool + Send + Sync>,
    pub produce: Produce<L>,
}

/// A trigger: the two carried-over endpoints and the labels to produce.
/// For `Wedge` the endpoints are the two sources, for `Vee` the two targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Trigger<L> {
    pub u: Vertex,
    pub v: Vertex,
    pub p1: L,
    pub p2: L,
}

/// A body match: the two edge indices plus the trigger they yield.
#[derive(Debug, Clone, Copy)]
pub struct BodyMatch<L> {
    pub e1: u32,
    pub e2: u32,
    pub trigger: Trigger<L>,
}

impl<L: Copy + Eq + Hash + Ord> PairTgd<L> {
    /// All body matches, in edge order.
    pub fn body_matches(&self, g: &LabeledGraph<L>) -> Vec<BodyMatch<L>> {
        let mut out = Vec::new();
        for (i, e1) in g.edges().iter().enumerate() {
            if !(self.first)(e1.label) {
                continue;
            }
            let partners = match self.mode {
                Mode::Wedge => g.in_edges(e1.dst),
                Mode::Vee => g.out_edges(e1.src),
            };
            for &j in partners {
                let e2 = g.edge(j);
                if let Some((p1, p2)) = (self.produce)(e1.label, e2.label) {
                    let (u, v) = match self.mode {
                        Mode::Wedge => (e1.src, e2.src),
                        Mode::Vee => (e1.dst, e2.dst),
                    };
                    out.push(BodyMatch {
                        e1: i as u32,
                        e2: j,
                        trigger: Trigger { u, v, p1, p2 },
                    });
                }
            }
        }
        out
    }

    pub fn triggers(&self, g: &LabeledGraph<L>) -> BTreeSet<Trigger<L>> {
        self.body_matches(g).into_iter().map(|m| m.trigger).collect()
    }

    /// Witness edge pairs for a trigger.
    pub fn witnesses(&self, g: &LabeledGraph<L>, t: &Trigger<L>) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        match self.mode {
            Mode::Wedge => {
                for &i in g.with_label_src(t.p1, t.u) {
                    let y = g.edge(i).dst;
                    for &j in g.with_label_dst(t.p2, y) {
                        if g.edge(j).src == t.v {
                            out.push((i, j));
                        }
                    }
                }
            }
            Mode::Vee => {
                for &i in g.with_label_dst(t.p1, t.u) {
                    let x = g.edge(i).src;
                    for &j in g.with_label_src(t.p2, x) {
                        if g.edge(j).dst == t.v {
                            out.push((i, j));
                        }
                    }
                }
            }
        }
        out
    }

    pub fn is_witnessed(&self, g: &LabeledGraph<L>, t: &Trigger<L>) -> bool {
        match self.mode {
            Mode::Wedge => g
                .with_label_src(t.p1, t.u)
                .iter()
                .any(|&i| g.has_edge(t.p2, t.v, g.edge(i).dst)),
            Mode::Vee => g
                .with_label_dst(t.p1, t.u)
                .iter()
                .any(|&i| g.has_edge(t.p2, g.edge(i).src, t.v)),
        }
    }

    /// Adds the two head edges around a fresh vertex; returns it.
    pub fn fire(
        &self,
        g: &mut LabeledGraph<L>,
        t: &Trigger<L>,
        counter: &mut u64,
        stage: usize,
    ) -> Vertex {
        let w = g.fresh_vertex("_n", counter);
        match self.mode {
            Mode::Wedge => {
                g.add_edge_at(t.p1, t.u, w, stage);
                g.add_edge_at(t.p2, t.v, w, stage);
            }
            Mode::Vee => {
                g.add_edge_at(t.p1, w, t.u, stage);
                g.add_edge_at(t.p2, w, t.v, stage);
            }
        }
        w
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Application {
    pub stage: usize,
    pub tgd: String,
    pub endpoints: (String, String),
    pub created: String,
}

/// Staged saturation driver, mirroring the relational chase.
pub struct Saturator<'a, L> {
    pub tgds: &'a [PairTgd<L>],
    pub graph: LabeledGraph<L>,
    pub counter: u64,
    pub stages_run: usize,
    pub fixpoint: bool,
    pub log: Vec<Application>,
    pub edges_after_stage: Vec<usize>,
}

impl<'a, L: Copy + Eq + Hash + Ord> Saturator<'a, L> {
    pub fn new(tgds: &'a [PairTgd<L>], graph: LabeledGraph<L>) -> Self {
        let n = graph.num_edges();
        Saturator {
            tgds,
            graph,
            counter: 0,
            stages_run: 0,
            fixpoint: false,
            log: Vec::new(),
            edges_after_stage: vec![n],
        }
    }

    /// Runs one stage with a trigger filter; returns the number applied.
    pub fn stage_with_filter(
        &mut self,
        mut keep: impl FnMut(&LabeledGraph<L>, usize, &Trigger<L>) -> bool,
    ) -> usize {
        let found: Vec<(usize, Trigger<L>)> = self
            .tgds
            .iter()
            .enumerate()
            .flat_map(|(i, t)| t.triggers(&self.graph).into_iter().map(move |tr| (i, tr)))
            .filter(|(i, tr)| keep(&self.graph, *i, tr))
            .collect();
        let stage = self.stages_run + 1;
        let mut applied = 0;
        for (i, tr) in found {
            let tgd = &self.tgds[i];
            if tgd.is_witnessed(&self.graph, &tr) {
                continue;
            }
            let w = tgd.fire(&mut self.graph, &tr, &mut self.counter, stage);
            applied += 1;
            let g = &self.graph;
            self.log.push(Application {
                stage,
                tgd: tgd.id.clone(),
                endpoints: (g.name(tr.u).to_string(), g.name(tr.v).to_string()),
                created: g.name(w).to_string(),
            });
        }
        self.stages_run = stage;
        self.fixpoint = applied == 0;
        self.edges_after_stage.push(self.graph.num_edges());
        applied
    }

    pub fn stage(&mut self) -> bool {
        self.stage_with_filter(|_, _, _| true) > 0
    }

    pub fn run(&mut self, budget: usize) -> bool {
        for _ in 0..budget {
            if !self.stage() {
                break;
            }
        }
        self.fixpoint
    }
}

/// Saturates `g` for at most `budget` stages; the flag reports a fixpoint.
pub fn saturate<L: Copy + Eq + Hash + Ord>(
    tgds: &[PairTgd<L>],
    g: &LabeledGraph<L>,
    budget: usize,
) -> (LabeledGraph<L>, bool) {
    let mut s = Saturator::new(tgds, g.clone());
    s.run(budget);
    let fix = s.fixpoint || violations(tgds, &s.graph).is_empty();
    (s.graph, fix)
}

/// Unwitnessed triggers: `(tgd index, trigger)`.
pub fn violations<L: Copy + Eq + Hash + Ord>(
    tgds: &[PairTgd<L>],
    g: &LabeledGraph<L>,
) -> Vec<(usize, Trigger<L>)> {
    let mut out = Vec::new();
    for (i, t) in tgds.iter().enumerate() {
        for tr in t.triggers(g) {
            if !t.is_witnessed(g, &tr) {
                out.push((i, tr));
            }
        }
    }
    out
}

/// Least set of edges containing `seed` and closed under: if both body
/// edges of a match are important, every witness pair is important.
pub fn important_edges<L: Copy + Eq + Hash + Ord>(
    tgds: &[PairTgd<L>],
    g: &LabeledGraph<L>,
    seed: u32,
) -> BTreeSet<u32> {
    let mut imp: HashSet<u32> = HashSet::new();
    imp.insert(seed);
    let matches: Vec<(usize, BodyMatch<L>)> = tgds
        .iter()
        .enumerate()
        .flat_map(|(i, t)| t.body_matches(g).into_iter().map(move |m| (i, m)))
        .collect();
    let mut done = vec![false; matches.len()];
    loop {
        let mut changed = false;
        for (k, (i, m)) in matches.iter().enumerate() {
            if done[k] || !imp.contains(&m.e1) || !imp.contains(&m.e2) {
                continue;
            }
            done[k] = true;
            for (w1, w2) in tgds[*i].witnesses(g, &m.trigger) {
                changed |= imp.insert(w1);
                changed |= imp.insert(w2);
            }
        }
        if !changed {
            break;
        }
    }
    imp.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn copy_rule(mode: Mode) -> PairTgd<u32> {
        PairTgd {
            id: "r".into(),
            mode,
            first: Box::new(|l| l == 1),
            produce: Box::new(|a, b| (a == 1 && b == 1).then_some((2, 3))),
        }
    }

    #[test]
    fn wedge_fires_once_and_is_lazy() {
        let mut g: LabeledGraph<u32> = LabeledGraph::new();
        g.add_named(1, "a", "b");
        let rules = [copy_rule(Mode::Wedge)];
        let (out, fix) = saturate(&rules, &g, 5);
        assert!(fix);
        assert_eq!(out.num_edges(), 3);
        assert!(out.has_named(2, "a", "_n0") && out.has_named(3, "a", "_n0"));
    }

    #[test]
    fn vee_shares_fresh_source() {
        let mut g: LabeledGraph<u32> = LabeledGraph::new();
        g.add_named(1, "a", "b");
        g.add_named(1, "a", "c");
        let rules = [copy_rule(Mode::Vee)];
        let (out, _) = saturate(&rules, &g, 5);
        // Pairs (b,b), (b,c), (c,b), (c,c).
        assert_eq!(out.num_edges(), 2 + 8);
        assert!(violations(&rules, &out).is_empty());
    }

    #[test]
    fn importance_skips_decoration() {
        let mut g: LabeledGraph<u32> = LabeledGraph::new();
        g.add_named(1, "a", "b");
        g.add_named(2, "a", "w");
        g.add_named(3, "a", "w");
        g.add_named(7, "x", "y");
        let rules = [copy_rule(Mode::Wedge)];
        let imp = important_edges(&rules, &g, 0);
        assert_eq!(imp, [0, 1, 2].into_iter().collect());
    }
}
