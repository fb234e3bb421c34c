//! The separating example: the infinite-path rules, the 41 grid rules, the
//! two-path grid experiment, the honest grids `M_t`, truncations of the
//! infinite model `M`, and (in [`views`]) the Level 0 view structures.

pub mod views;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::codes::{Dir, GridLabel, Kind, SkeletonCodes};
use crate::greengraph::{has_12_pattern, l2_tgds, seed_graph, GreenGraph, Label2, RuleL2};
use crate::labgraph::Vertex;
use crate::rewrite::Saturator;

/// Rules (I), (II), (III) of the infinite path.
pub fn t_inf(sk: &SkeletonCodes) -> Vec<RuleL2> {
    let c = Some;
    vec![
        RuleL2::wedge(None, None, c(sk.alpha), c(sk.eta1)),
        RuleL2::vee(None, c(sk.eta1), c(sk.eta0), c(sk.beta1)),
        RuleL2::wedge(None, c(sk.eta0), c(sk.eta1), c(sk.beta0)),
    ]
}

fn g(dir: Dir, kind: Kind, diag: bool, border: bool) -> Label2 {
    Some(GridLabel::new(dir, kind, diag, border).code())
}

/// The 41 grid rules: the trigger, four southern-strip rules, four
/// eastern-strip rules and the two 16-rule interior schemes.
pub fn t_box(sk: &SkeletonCodes) -> Vec<RuleL2> {
    use Dir::*;
    use Kind::*;
    let (al, b0, b1) = (Some(sk.alpha), Some(sk.beta0), Some(sk.beta1));
    let mut r = vec![
        // grid triggering rule
        RuleL2::wedge(b0, b0, g(N, Beta, true, true), g(W, Beta, true, true)),
        // southern strip
        RuleL2::vee(b1, g(N, Beta, true, true), g(S, Beta, false, true), g(E, Beta, true, false)),
        RuleL2::wedge(b0, g(S, Beta, false, true), g(N, Beta, false, true), g(W, Beta, false, false)),
        RuleL2::vee(b1, g(N, Beta, false, true), g(S, Beta, false, true), g(E, Beta, false, false)),
        RuleL2::wedge(al, g(S, Beta, false, true), g(N, Beta, false, true), g(W, Alpha, false, false)),
        // eastern strip
        RuleL2::vee(b1, g(W, Beta, true, true), g(E, Beta, false, true), g(S, Beta, true, false)),
        RuleL2::wedge(b0, g(E, Beta, false, true), g(W, Beta, false, true), g(N, Beta, false, false)),
        RuleL2::vee(b1, g(W, Beta, false, true), g(E, Beta, false, true), g(S, Beta, false, false)),
        // The printed version repeats ⟨w,β,d̄,b⟩ on the left; the eastern
        // strip edge it has to meet is ⟨e,β,d̄,b⟩, mirroring the southern one.
        RuleL2::wedge(al, g(E, Beta, false, true), g(W, Beta, false, true), g(N, Alpha, false, false)),
    ];
    for x in [true, false] {
        for y in [true, false] {
            for th in [Alpha, Beta] {
                for om in [Alpha, Beta] {
                    r.push(RuleL2::wedge(
                        g(E, th, x, false),
                        g(S, om, y, false),
                        g(N, om, x, false),
                        g(W, th, y, false),
                    ));
                }
            }
        }
    }
    for x in [true, false] {
        for y in [true, false] {
            for th in [Alpha, Beta] {
                for om in [Alpha, Beta] {
                    r.push(RuleL2::vee(
                        g(W, th, x, false),
                        g(N, om, y, false),
                        g(S, om, x, false),
                        g(E, th, y, false),
                    ));
                }
            }
        }
    }
    r
}

/// `𝔗_∞ ∪ 𝔗_⊞`, path rules first.
pub fn t_full(sk: &SkeletonCodes) -> Vec<RuleL2> {
    let mut r = t_inf(sk);
    r.extend(t_box(sk));
    r
}

pub fn is_skeleton(sk: &SkeletonCodes, l: Label2) -> bool {
    match l {
        None => true,
        Some(c) => [sk.alpha, sk.beta0, sk.beta1, sk.eta0, sk.eta1].contains(&c),
    }
}

pub fn is_foam(l: Label2) -> bool {
    l.and_then(GridLabel::from_code).is_some()
}

/// The chase of the path rules over the seed, `stages` stages deep, with
/// vertices renamed `b1, a1, b2, a2, ...` by creation stage.
pub fn chase_prefix(sk: &SkeletonCodes, stages: usize) -> GreenGraph {
    let tgds = l2_tgds(&t_inf(sk));
    let mut s = Saturator::new(&tgds, seed_graph());
    for _ in 0..stages {
        s.stage();
    }
    let g = s.graph;
    let stage_of: Vec<usize> = g.vertices().map(|v| g.vertex_stage(v)).collect();
    g.renamed(|v, _| skeleton_name(stage_of[v as usize]))
}

/// `b_{j+1}` is born at stage `2j+1`, `a_j` at stage `2j`.
fn skeleton_name(stage: usize) -> String {
    if stage % 2 == 1 {
        format!("b{}", stage / 2 + 1)
    } else {
        format!("a{}", stage / 2)
    }
}

/// Adds the αβ-path `a, b1, a1, ..., a_t, b_{t+1}` (word `α(β1 β0)^t`)
/// with vertex names `<p>b1, <p>a1, ...`; the last vertex is `end` when
/// given.
fn add_path(gr: &mut GreenGraph, sk: &SkeletonCodes, t: usize, p: &str, end: Option<&str>) {
    let b = |j: usize| -> String {
        match end {
            Some(e) if j == t + 1 => e.to_string(),
            _ => format!("{p}b{j}"),
        }
    };
    gr.add_named(Some(sk.alpha), "a", &b(1));
    for j in 1..=t {
        let a = format!("{p}a{j}");
        gr.add_named(Some(sk.beta1), &a, &b(j));
        gr.add_named(Some(sk.beta0), &a, &b(j + 1));
    }
}

/// Two αβ-paths from `a` with `t` and `t'` β-squares whose last vertices
/// are identified, plus the seed.  Equal lengths give a single path.
pub fn build_two_path(sk: &SkeletonCodes, t: usize, t_prime: usize) -> GreenGraph {
    assert!(t >= 1 && t_prime >= 1, "paths need at least one β-square");
    let mut gr = seed_graph();
    if t == t_prime {
        add_path(&mut gr, sk, t, "p.", None);
    } else {
        add_path(&mut gr, sk, t, "p.", Some("end"));
        add_path(&mut gr, sk, t_prime, "q.", Some("end"));
    }
    gr
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GridStatus {
    #[serde(rename = "pattern")]
    Pattern,
    #[serde(rename = "fixpoint-without-pattern")]
    NoPattern,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridReport {
    pub t: usize,
    pub t_prime: usize,
    pub pattern_found: bool,
    pub status: GridStatus,
    pub stages: usize,
    pub grid_size: usize,
    pub edges: usize,
    pub pattern: Option<(String, String, String)>,
}

/// Saturates the two-path graph under all rules until a 1-2 pattern shows
/// up, a fixpoint is reached, or `budget` stages have run.
pub fn grid_experiment(sk: &SkeletonCodes, t: usize, t_prime: usize, budget: usize) -> GridReport {
    grid_experiment_with(&t_full(sk), sk, t, t_prime, budget)
}

/// [`grid_experiment`] under an arbitrary rule set containing the grid
/// rules, e.g. a compiled rainworm plus `𝔗_⊞`.
pub fn grid_experiment_with(
    rules: &[RuleL2],
    sk: &SkeletonCodes,
    t: usize,
    t_prime: usize,
    budget: usize,
) -> GridReport {
    let tgds = l2_tgds(rules);
    let mut s = Saturator::new(&tgds, build_two_path(sk, t, t_prime));
    let mut status = GridStatus::Inconclusive;
    let mut pattern = None;
    for _ in 0..=budget {
        if let Some((x, y, z)) = has_12_pattern(&s.graph) {
            let gr = &s.graph;
            pattern = Some((gr.name(x).to_string(), gr.name(y).to_string(), gr.name(z).to_string()));
            status = GridStatus::Pattern;
            break;
        }
        if s.stages_run == budget {
            break;
        }
        if !s.stage() {
            status = GridStatus::NoPattern;
            break;
        }
    }
    let gr = &s.graph;
    GridReport {
        t,
        t_prime,
        pattern_found: status == GridStatus::Pattern,
        status,
        stages: s.stages_run,
        grid_size: gr.edges().iter().filter(|e| is_foam(e.label)).count(),
        edges: gr.num_edges(),
        pattern,
    }
}

/// Stage budget that comfortably completes a `t × t'` grid.
pub fn grid_budget(t: usize, t_prime: usize) -> usize {
    4 * (t + t_prime) + 8
}

/// The honest grid `M_t`: the path `a .. b_{t+1}` plus everything the grid
/// rules build from the trigger on `β0(a_t, b_{t+1})`.  Non-path vertices
/// are named `m<t>.<k>`.
pub fn build_mt(sk: &SkeletonCodes, t: usize) -> GreenGraph {
    assert!(t >= 1);
    let mut path = GreenGraph::new();
    add_path(&mut path, sk, t, "", None);
    let at = path.lookup(&format!("a{t}")).expect("path vertex");
    let tgds = l2_tgds(&t_box(sk));
    let mut s = Saturator::new(&tgds, path);
    // TGD 0 is the forward grid trigger; only the one at a_t may fire.
    while s.stage_with_filter(|_, i, tr| i != 0 || (tr.u == at && tr.v == at)) > 0 {}
    let n_path = 2 * t + 3;
    s.graph.renamed(|v, name| {
        if (v as usize) < n_path {
            name.to_string()
        } else {
            format!("m{t}.{}", name.trim_start_matches("_n"))
        }
    })
}

/// A truncation of `M`: the path chase `depth` stages deep plus every
/// `M_t` whose trigger edge is present.
#[derive(Debug, Clone)]
pub struct MTruncation {
    pub graph: GreenGraph,
    pub depth: usize,
    /// For every edge, the grids `M_t` it belongs to.
    pub membership: Vec<BTreeSet<usize>>,
    /// Chase vertices born at stage `>= depth - 1`.
    pub frontier: BTreeSet<Vertex>,
}

pub fn build_m_truncated(sk: &SkeletonCodes, depth: usize) -> MTruncation {
    let prefix = chase_prefix(sk, depth);
    let frontier: BTreeSet<Vertex> = prefix
        .vertices()
        .filter(|&v| {
            let s = prefix.vertex_stage(v);
            s != usize::MAX && s + 1 >= depth && !prefix.is_constant(v)
        })
        .collect();
    let mut graph = prefix.clone();
    let mut grids = Vec::new();
    let mut t = 1;
    while 2 * t + 1 <= depth {
        let mt = build_mt(sk, t);
        graph.absorb(&mt);
        grids.push((t, mt));
        t += 1;
    }
    let mut membership = vec![BTreeSet::new(); graph.num_edges()];
    for (t, mt) in &grids {
        for e in mt.edges() {
            let (s, d) = (
                graph.lookup(mt.name(e.src)).expect("absorbed"),
                graph.lookup(mt.name(e.dst)).expect("absorbed"),
            );
            let i = graph
                .with_label_src(e.label, s)
                .iter()
                .copied()
                .find(|&i| graph.edge(i).dst == d)
                .expect("absorbed edge");
            membership[i as usize].insert(*t);
        }
    }
    // Absorption keeps prefix vertex ids, so the frontier ids carry over.
    MTruncation { graph, depth, membership, frontier }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ViolationSummary {
    pub total: usize,
    pub frontier_local: usize,
    pub non_local: Vec<String>,
}

/// Unwitnessed triggers of all rules; a trigger is frontier-local when one
/// of its body edges touches a frontier vertex.
pub fn truncation_violations(sk: &SkeletonCodes, m: &MTruncation) -> ViolationSummary {
    let tgds = l2_tgds(&t_full(sk));
    let gr = &m.graph;
    let mut out = ViolationSummary::default();
    for tgd in &tgds {
        let mut seen = BTreeSet::new();
        for bm in tgd.body_matches(gr) {
            if tgd.is_witnessed(gr, &bm.trigger) {
                continue;
            }
            let (e1, e2) = (gr.edge(bm.e1), gr.edge(bm.e2));
            let local = [e1.src, e1.dst, e2.src, e2.dst]
                .iter()
                .any(|v| m.frontier.contains(v));
            if !seen.insert((bm.trigger, local)) {
                continue;
            }
            out.total += 1;
            if local {
                out.frontier_local += 1;
            } else {
                out.non_local.push(format!(
                    "{} at ({}, {})",
                    tgd.id,
                    gr.name(bm.trigger.u),
                    gr.name(bm.trigger.v)
                ));
            }
        }
    }
    out
}

/// Structural checks of the four foam facts; each list holds violations.
#[derive(Debug, Clone, Default, Serialize)]
pub struct FoamReport {
    pub item1: Vec<String>,
    pub item2: Vec<String>,
    pub item3: Vec<String>,
    pub item4: Vec<String>,
    /// Skeleton edges outside every `M_t` (the seed and the η edges) that
    /// touch foam; item 2 is checked for α/β edges only.
    pub item2_skipped: usize,
}

impl FoamReport {
    pub fn holds(&self) -> bool {
        self.item1.is_empty() && self.item2.is_empty() && self.item3.is_empty() && self.item4.is_empty()
    }
}

pub fn check_foam(sk: &SkeletonCodes, m: &MTruncation) -> FoamReport {
    let gr = &m.graph;
    let mut rep = FoamReport::default();
    let incident = |v: Vertex| -> Vec<u32> {
        let mut x: Vec<u32> = gr.out_edges(v).iter().chain(gr.in_edges(v)).copied().collect();
        x.sort_unstable();
        x.dedup();
        x
    };
    let grid_of = |i: u32| -> Option<usize> { m.membership[i as usize].iter().next().copied() };
    let ab = [Some(sk.alpha), Some(sk.beta0), Some(sk.beta1)];
    let show = |i: u32| {
        let e = gr.edge(i);
        format!("{:?}({}, {})", e.label, gr.name(e.src), gr.name(e.dst))
    };
    for v in gr.vertices() {
        let inc = incident(v);
        let skel: Vec<u32> = inc.iter().copied().filter(|&i| is_skeleton(sk, gr.edge(i).label)).collect();
        let foam: Vec<u32> = inc.iter().copied().filter(|&i| is_foam(gr.edge(i).label)).collect();
        for &f in &foam {
            let fl = GridLabel::from_code(gr.edge(f).label.unwrap()).unwrap();
            if !skel.is_empty() && !fl.border {
                rep.item1.push(format!("{} next to skeleton at {}", show(f), gr.name(v)));
            }
            let t = grid_of(f);
            for &s in &skel {
                if !ab.contains(&gr.edge(s).label) {
                    rep.item2_skipped += 1;
                    continue;
                }
                if let Some(t) = t {
                    if !m.membership[s as usize].contains(&t) {
                        rep.item2.push(format!("{} touches {} outside M_{t}", show(s), show(f)));
                    }
                }
            }
            for &f2 in &foam {
                if let (Some(t1), Some(t2)) = (t, grid_of(f2)) {
                    if t1 != t2 && skel.is_empty() {
                        rep.item3.push(format!("{} and {} meet at {}", show(f), show(f2), gr.name(v)));
                    }
                }
            }
        }
    }
    for (i, e) in gr.edges().iter().enumerate() {
        let Some(fl) = e.label.and_then(GridLabel::from_code) else {
            continue;
        };
        if fl.dir != Dir::N {
            continue;
        }
        let Some(t) = grid_of(i as u32) else {
            continue;
        };
        for j in incident(e.dst) {
            if !m.membership[j as usize].contains(&t) {
                rep.item4.push(format!("{} shares the end of north edge {}", show(j), show(i as u32)));
            }
        }
    }
    rep
}

/// Vertex names of the Fig. 1 prefix, for quick inspection.
pub fn skeleton_edges(g: &GreenGraph, names: &BTreeMap<u32, String>) -> Vec<String> {
    g.edges()
        .iter()
        .map(|e| {
            let l = match e.label {
                None => "∅".to_string(),
                Some(c) => names.get(&c).cloned().unwrap_or_else(|| c.to_string()),
            };
            format!("{l}({}, {})", g.name(e.src), g.name(e.dst))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_counts() {
        let sk = SkeletonCodes::default();
        assert_eq!(t_inf(&sk).len(), 3);
        let tb = t_box(&sk);
        assert_eq!(tb.len(), 41);
        for r in t_full(&sk) {
            r.validate().unwrap();
        }
    }

    #[test]
    fn chase_prefix_names() {
        let sk = SkeletonCodes::default();
        let g = chase_prefix(&sk, 4);
        assert!(g.has_named(Some(sk.alpha), "a", "b1"));
        assert!(g.has_named(Some(sk.eta1), "a", "b1"));
        assert!(g.has_named(Some(sk.eta0), "a1", "b"));
        assert!(g.has_named(Some(sk.beta1), "a1", "b1"));
        assert!(g.has_named(Some(sk.beta0), "a1", "b2"));
        assert!(g.has_named(Some(sk.beta1), "a2", "b2"));
        assert_eq!(g.num_edges(), 9);
    }

    #[test]
    fn two_path_shapes() {
        let sk = SkeletonCodes::default();
        let same = build_two_path(&sk, 2, 2);
        assert_eq!(same.num_edges(), 1 + 5);
        let diff = build_two_path(&sk, 1, 2);
        assert_eq!(diff.num_edges(), 1 + 3 + 5);
        assert_eq!(diff.with_label_dst(Some(sk.beta0), diff.lookup("end").unwrap()).len(), 2);
    }
}
