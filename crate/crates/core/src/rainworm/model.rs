//! From a rainworm to green graph rules, and the finite model `M` built
//! backwards from the final configuration of a halting machine.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{Config, Machine, RainwormError, RunResult, Shape};
use crate::chase::{check_determinacy_condition, DeterminacyCheck};
use crate::greengraph::{
    has_12_pattern, l2_tgds, max_code_l1, parity_glasses, precompile_rules, seed_graph, words, GreenGraph,
    RuleL2,
};
use crate::labgraph::{LabeledGraph, Vertex, A, B};
use crate::rewrite::{violations, Saturator, Trigger};
use crate::sepexample::{grid_experiment_with, t_box, GridReport};
use crate::spider::{compile_swarm, full_spider_query, is_even, LabelUniverse, Mode};
use crate::swarm::{compile_rules, precompile_map};

/// `𝔗_△`: the two fixed rules, then one rule per instruction other than
/// `◇1` (whose rule is the second fixed one).  Single-symbol left sides
/// pair with `∅`; the mode follows the parity of the first symbol.
pub fn compile_to_greengraph(m: &Machine) -> Vec<RuleL2> {
    let sk = &m.sk;
    let mut out = vec![
        RuleL2::wedge(None, None, Some(sk.alpha), Some(sk.eta11)),
        RuleL2::vee(Some(sk.eta11), None, Some(sk.gamma1), Some(sk.eta0)),
    ];
    for ins in &m.instructions {
        if ins.shape == Shape::D1 {
            continue;
        }
        let (c, d) = (ins.lhs[0], ins.lhs.get(1).copied());
        let (c2, d2) = (ins.rhs[0], ins.rhs[1]);
        let r = if is_even(c) {
            RuleL2::wedge(Some(c), d, Some(c2), Some(d2))
        } else {
            RuleL2::vee(Some(c), d, Some(c2), Some(d2))
        };
        out.push(r);
    }
    out
}

/// `𝔗_△^⊞ = 𝔗_△ ∪ 𝔗_⊞`.
pub fn compile_with_grid(m: &Machine) -> Vec<RuleL2> {
    let mut r = compile_to_greengraph(m);
    r.extend(t_box(&m.sk));
    r
}

/// `M⁰`: the seed plus the path of `u`, even symbols forwards and odd ones
/// backwards.  Vertices after `a` are `b1, a1, b2, a2, ...`; the path ends
/// in `b` after an even symbol and in `a` after an odd one.
pub fn initial_m0(u: &[u32]) -> GreenGraph {
    let mut g = seed_graph();
    let n = u.len();
    let name = |i: usize| -> String {
        if i == 0 {
            "a".into()
        } else if i == n {
            if is_even(u[n - 1]) { "b" } else { "a" }.into()
        } else if i % 2 == 1 {
            format!("b{}", i.div_ceil(2))
        } else {
            format!("a{}", i / 2)
        }
    };
    for (i, &x) in u.iter().enumerate() {
        let (p, q) = (name(i), name(i + 1));
        if is_even(x) {
            g.add_named(Some(x), &p, &q);
        } else {
            g.add_named(Some(x), &q, &p);
        }
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Side {
    /// The body is the rule's left side `I1 ⊙ I2`.
    Left,
    /// The body is the right side `I3 ⊙ I4`.
    Right,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Match {
    pub rule: usize,
    pub side: Side,
    pub edges: (u32, u32),
    pub endpoints: (String, String),
    /// The other side has no witness.
    pub interesting: bool,
}

/// Every edge pair matching one side of a rule, classified by whether the
/// opposite side is present.
pub fn find_matches(g: &GreenGraph, rules: &[RuleL2]) -> Vec<Match> {
    let tgds = l2_tgds(rules);
    let mut out = Vec::new();
    for (k, t) in tgds.iter().enumerate() {
        let side = if k % 2 == 0 { Side::Left } else { Side::Right };
        for bm in t.body_matches(g) {
            out.push(Match {
                rule: k / 2,
                side,
                edges: (bm.e1, bm.e2),
                endpoints: (g.name(bm.trigger.u).to_string(), g.name(bm.trigger.v).to_string()),
                interesting: !t.is_witnessed(g, &bm.trigger),
            });
        }
    }
    out
}

pub fn interesting(matches: &[Match], side: Side) -> usize {
    matches.iter().filter(|m| m.interesting && m.side == side).count()
}

#[derive(Debug, Clone)]
pub struct FiniteModel {
    pub rules: Vec<RuleL2>,
    pub u: Config,
    pub k: usize,
    pub model: GreenGraph,
    /// `M⁰ .. M^{k+1}` when retained.
    pub snapshots: Vec<GreenGraph>,
    /// Edges added by each outer iteration.
    pub added: Vec<usize>,
}

/// The backward procedure: `k+1` rounds, each applying the right-to-left
/// direction of every rule at every interesting right-match of the previous
/// round's graph.  A `∅` in the produced pair reuses `b` (wedge) or `a`
/// (vee) instead of creating a vertex.
pub fn finite_model_procedure(
    m: &Machine,
    run: &RunResult,
    keep_snapshots: bool,
    max_edges: usize,
) -> Result<FiniteModel, RainwormError> {
    let u = run
        .final_config()
        .ok_or(RainwormError::NotHalted(run.steps))?
        .clone();
    let k = run.steps;
    let rules = compile_to_greengraph(m);
    let tgds = l2_tgds(&rules);
    let mut g = initial_m0(&u);
    let mut snapshots = Vec::new();
    let mut added = Vec::new();
    let mut counter = 0u64;
    for round in 0..=k {
        if keep_snapshots {
            snapshots.push(g.clone());
        }
        let found: BTreeSet<(usize, Trigger<Option<u32>>)> = (0..rules.len())
            .flat_map(|r| {
                let t = &tgds[2 * r + 1];
                t.triggers(&g)
                    .into_iter()
                    .filter(|tr| !t.is_witnessed(&g, tr))
                    .map(move |tr| (r, tr))
            })
            .collect();
        let before = g.num_edges();
        let mut next = g.clone();
        let stage = round + 1;
        for (r, tr) in found {
            let rule = &rules[r];
            if rule.i2.is_some() {
                tgds[2 * r + 1].fire(&mut next, &tr, &mut counter, stage);
                continue;
            }
            let (reuse, from, to) = match rule.mode {
                Mode::Wedge => (A, tr.u, B),
                Mode::Vee => (B, A, tr.u),
            };
            if tr.v != reuse {
                return Err(RainwormError::Discrepancy(format!(
                    "rule {r} met an empty second label at {} instead of {}",
                    g.name(tr.v),
                    g.name(reuse)
                )));
            }
            next.add_edge_at(tr.p1, from, to, stage);
        }
        g = next;
        added.push(g.num_edges() - before);
        if g.num_edges() > max_edges {
            return Err(RainwormError::EdgeBudget(max_edges));
        }
    }
    if keep_snapshots {
        snapshots.push(g.clone());
    }
    Ok(FiniteModel {
        rules,
        u,
        k,
        model: g,
        snapshots,
        added,
    })
}

/// Directed simple paths of `PG` from `a` ending at `a` or `b`, as edge
/// index lists; `None` when more than `cap` are found.
pub fn ab_paths(pg: &LabeledGraph<u32>, cap: usize) -> Option<Vec<Vec<u32>>> {
    fn go(
        pg: &LabeledGraph<u32>,
        v: Vertex,
        path: &mut Vec<u32>,
        seen: &mut BTreeSet<Vertex>,
        out: &mut Vec<Vec<u32>>,
        cap: usize,
    ) -> bool {
        for &i in pg.out_edges(v) {
            let w = pg.edge(i).dst;
            path.push(i);
            if w == A || w == B {
                out.push(path.clone());
                if out.len() > cap {
                    return false;
                }
            } else if seen.insert(w) {
                let ok = go(pg, w, path, seen, out, cap);
                seen.remove(&w);
                if !ok {
                    return false;
                }
            }
            path.pop();
        }
        true
    }
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    go(pg, A, &mut Vec::new(), &mut seen, &mut out, cap).then_some(out)
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SnapshotCheck {
    pub round: usize,
    pub ab_paths: usize,
    pub edges_on_ab_paths: bool,
    pub one_state_per_path: bool,
    pub state_edge_on_one_path: bool,
    pub words_reach_u: bool,
    /// Interesting left-matches other than the seed's own `∅ ⩚̈ ∅`, which
    /// stays open until the initial configuration's path appears.
    pub interesting_left: usize,
}

impl SnapshotCheck {
    pub fn ok(&self) -> bool {
        self.edges_on_ab_paths
            && self.one_state_per_path
            && self.state_edge_on_one_path
            && self.words_reach_u
            && self.interesting_left == 0
    }
}

/// The loop invariants on one snapshot.
pub fn check_snapshot(
    m: &Machine,
    fm: &FiniteModel,
    round: usize,
    g: &GreenGraph,
    cap: usize,
) -> Result<SnapshotCheck, RainwormError> {
    let pg = parity_glasses(g).map_err(|e| RainwormError::Discrepancy(e.to_string()))?;
    let paths = ab_paths(&pg, cap).ok_or(RainwormError::EdgeBudget(cap))?;
    let mut on_path = vec![false; pg.num_edges()];
    let mut state_paths = vec![0usize; pg.num_edges()];
    let mut one_state = true;
    let mut reach = true;
    for p in &paths {
        let mut states = 0;
        for &i in p {
            on_path[i as usize] = true;
            if m.is_state(pg.edge(i).label) {
                states += 1;
                state_paths[i as usize] += 1;
            }
        }
        one_state &= states == 1;
        let w: Vec<u32> = p.iter().map(|&i| pg.edge(i).label).collect();
        reach &= m.steps_to(&w, &fm.u, fm.k)?.is_some();
    }
    let state_once = (0..pg.num_edges())
        .filter(|&i| m.is_state(pg.edge(i as u32).label))
        .all(|i| state_paths[i] == 1);
    let interesting_left = find_matches(g, &fm.rules)
        .iter()
        .filter(|x| x.interesting && x.side == Side::Left && x.rule != 0)
        .count();
    Ok(SnapshotCheck {
        round,
        ab_paths: paths.len(),
        edges_on_ab_paths: on_path.iter().all(|&b| b),
        one_state_per_path: one_state,
        state_edge_on_one_path: state_once,
        words_reach_u: reach,
        interesting_left,
    })
}

/// Every `β`-labelled edge of `M` is already an edge of `M⁰`.
pub fn beta_edges_in_m0(m: &Machine, fm: &FiniteModel) -> bool {
    let sk = &m.sk;
    let m0 = initial_m0(&fm.u);
    fm.model.edges().iter().all(|e| {
        let beta = e.label == Some(sk.beta0) || e.label == Some(sk.beta1);
        !beta || m0.has_named(e.label, fm.model.name(e.src), fm.model.name(e.dst))
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ForwardReport {
    pub configs: usize,
    pub max_len: usize,
    /// Smallest saturation stage whose words contain every configuration.
    pub stage: Option<usize>,
    pub missing: Vec<String>,
}

/// Configurations reachable in at most `steps` steps.
pub fn reachable(m: &Machine, steps: usize) -> Result<Vec<Config>, RainwormError> {
    let mut out = vec![m.initial()];
    for _ in 0..steps {
        match m.step(out.last().expect("non-empty"))? {
            Some(n) => out.push(n),
            None => break,
        }
    }
    Ok(out)
}

/// Saturates `𝔗_△` from the seed stage by stage until the words of the
/// graph contain every configuration reachable in `steps` steps.
pub fn forward_simulation(m: &Machine, steps: usize, stage_budget: usize) -> Result<ForwardReport, RainwormError> {
    let configs = reachable(m, steps)?;
    let max_len = configs.iter().map(Vec::len).max().unwrap_or(0);
    let tgds = l2_tgds(&compile_to_greengraph(m));
    let mut s = Saturator::new(&tgds, seed_graph());
    let missing_at = |g: &GreenGraph| -> Vec<String> {
        let ws = words(g, max_len).unwrap_or_default();
        configs.iter().filter(|c| !ws.contains(*c)).map(|c| m.word(c)).collect()
    };
    let mut missing = missing_at(&s.graph);
    let mut stage = None;
    for st in 0..=stage_budget {
        if missing.is_empty() {
            stage = Some(st);
            break;
        }
        if st == stage_budget || !s.stage() {
            break;
        }
        missing = missing_at(&s.graph);
    }
    Ok(ForwardReport {
        configs: configs.len(),
        max_len,
        stage,
        missing,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Counterexample {
    pub edges: usize,
    pub vertices: usize,
    pub fixpoint: bool,
    pub has_seed: bool,
    pub pattern: bool,
    pub rainworm_violations: usize,
    pub grid_edges: usize,
    pub level0: Option<Level0Check>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Level0Check {
    pub s: u32,
    pub queries: usize,
    pub atoms: usize,
    pub holds: bool,
    pub satisfies_tgds: bool,
    pub witness: Option<Vec<String>>,
}

impl From<(u32, usize, usize, DeterminacyCheck)> for Level0Check {
    fn from((s, queries, atoms, d): (u32, usize, usize, DeterminacyCheck)) -> Self {
        Level0Check {
            s,
            queries,
            atoms,
            holds: d.holds,
            satisfies_tgds: d.satisfies_tgds,
            witness: d.witness,
        }
    }
}

impl Counterexample {
    /// Everything the construction promises.
    pub fn ok(&self) -> bool {
        self.fixpoint
            && self.has_seed
            && !self.pattern
            && self.rainworm_violations == 0
            && self
                .level0
                .as_ref()
                .is_none_or(|l| !l.holds && l.satisfies_tgds)
    }
}

/// `𝔐`: `M` saturated under `𝔗_△^⊞`, optionally pushed through
/// precompile and compile to a Level 0 instance where the green spider
/// query has no red counterpart.
pub fn full_counterexample(
    m: &Machine,
    fm: &FiniteModel,
    budget: usize,
    level0: bool,
) -> Result<(GreenGraph, Counterexample), RainwormError> {
    let boxed = compile_with_grid(m);
    let tgds = l2_tgds(&boxed);
    let mut s = Saturator::new(&tgds, fm.model.clone());
    s.run(budget);
    let g = s.graph;
    let fixpoint = violations(&tgds, &g).is_empty();
    let own = l2_tgds(&fm.rules);
    let grid_edges = g
        .edges()
        .iter()
        .filter(|e| crate::sepexample::is_foam(e.label))
        .count();
    let mut report = Counterexample {
        edges: g.num_edges(),
        vertices: g.num_vertices(),
        fixpoint,
        has_seed: crate::greengraph::has_seed(&g),
        pattern: has_12_pattern(&g).is_some(),
        rainworm_violations: violations(&own, &g).len(),
        grid_edges,
        level0: None,
    };
    if level0 && fixpoint && !report.pattern {
        let swarm = precompile_map(&g, &boxed).map_err(|e| RainwormError::Discrepancy(e.to_string()))?;
        let l1 = precompile_rules(&boxed);
        let sz = max_code_l1(&l1);
        let universe = LabelUniverse::new(sz);
        let queries: Vec<_> = compile_rules(&l1, universe)
            .map_err(|e| RainwormError::Discrepancy(e.to_string()))?
            .into_iter()
            .map(|q| q.canonical)
            .collect();
        let d = compile_swarm(&swarm, sz);
        let check = check_determinacy_condition(&queries, &full_spider_query(sz), &d)
            .map_err(|e| RainwormError::Discrepancy(e.to_string()))?;
        report.level0 = Some((sz, queries.len(), d.num_atoms(), check).into());
    }
    Ok((g, report))
}

/// The grid experiment with `𝔗_△^⊞` on two slime trails of lengths `t`
/// and `t'` glued at their ends.
pub fn trail_grid(m: &Machine, t: usize, t_prime: usize, budget: usize) -> GridReport {
    grid_experiment_with(&compile_with_grid(m), &m.sk, t, t_prime, budget)
}

/// Readable names for every code a report mentions.
pub fn symbol_names(m: &Machine) -> BTreeMap<u32, String> {
    m.table.names.clone()
}

#[cfg(test)]
mod tests {
    use super::super::{delta_halt, delta_loop};
    use super::*;
    use crate::codes::SkeletonCodes;

    fn machine(j: &super::super::MachineJson) -> Machine {
        Machine::from_json(j, &SkeletonCodes::default()).unwrap()
    }

    #[test]
    fn rule_count_and_modes() {
        let m = machine(&delta_loop());
        let rules = compile_to_greengraph(&m);
        assert_eq!(rules.len(), 2 + m.instructions.len() - 1);
        for r in &rules {
            r.validate().unwrap();
        }
        let sk = m.sk;
        // ◇2: η0 ⩚̈ ∅ ⇄ b0 ⩚̈ η1
        let b0 = m.table.names.iter().find(|(_, n)| *n == "b0").map(|(&c, _)| c);
        assert!(rules.contains(&RuleL2::wedge(Some(sk.eta0), None, b0, Some(sk.eta1))));
    }

    #[test]
    fn m0_of_halting_fixture() {
        let sk = SkeletonCodes::default();
        let g = initial_m0(&[sk.alpha, sk.gamma1, sk.eta0]);
        assert!(g.has_named(Some(sk.alpha), "a", "b1"));
        assert!(g.has_named(Some(sk.gamma1), "a1", "b1"));
        assert!(g.has_named(Some(sk.eta0), "a1", "b"));
        assert_eq!(g.num_edges(), 4);
    }

    #[test]
    fn seed_has_one_interesting_match() {
        let m = machine(&delta_halt());
        let ms = find_matches(&seed_graph(), &compile_to_greengraph(&m));
        assert_eq!(ms.len(), 1);
        assert_eq!((ms[0].rule, ms[0].side, ms[0].interesting), (0, Side::Left, true));
    }

    #[test]
    fn halting_model_is_hand_computed() {
        let m = machine(&delta_halt());
        let run = m.run(10).unwrap();
        let fm = finite_model_procedure(&m, &run, true, 1000).unwrap();
        let sk = m.sk;
        let mut expect = initial_m0(&fm.u);
        expect.add_named(Some(sk.eta11), "a", "b1");
        assert_eq!(fm.model.named_edges(), expect.named_edges());
        assert_eq!(fm.added, vec![1, 0]);
        assert!(find_matches(&fm.model, &fm.rules).iter().all(|x| !x.interesting));
    }
}
