//! Level 0 view structures: the compiled path queries `𝒬_∞` and grid
//! queries `𝒬_⊞`, staged chases of their TGDs from the compiled seed, late
//! fragments, and the two disjoint unions `D_y` / `D_n`.
//!
//! Views are compared by element names.  Restriction to one color keeps
//! names, so a tuple in the green view but not in the red one is exactly an
//! unwitnessed green-to-red trigger.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::chase::{tgds_of_queries, ChaseResult, Chaser, Dependency};
use crate::codes::SkeletonCodes;
use crate::greengraph::{max_code_l1, precompile_rules};
use crate::relcore::{dalt, eval_cq_named, exists_homomorphism, restrict, Color, ConjunctiveQuery, Structure};
use crate::spider::{compile_swarm, full_spider_query, make_spider, IdealSpider, LabelUniverse};
use crate::swarm::{compiled_queries, seed_swarm};

use super::{t_box, t_full, t_inf};

pub type NamedQuery = (String, ConjunctiveQuery);
pub type Views = BTreeMap<String, BTreeSet<Vec<String>>>;

/// Compiled queries of one label universe, split into the path part and
/// the grid part.  The base triple belongs to both.
pub struct QuerySetup {
    pub s: u32,
    pub inf: Vec<NamedQuery>,
    pub boxed: Vec<NamedQuery>,
    pub inf_tgds: Vec<Dependency>,
    pub box_tgds: Vec<Dependency>,
}

const BASE_RULES: usize = 3;

impl QuerySetup {
    /// `𝒬_∞` alone, over the smallest universe it needs.
    pub fn path_only(sk: &SkeletonCodes) -> Self {
        let rules = precompile_rules(&t_inf(sk));
        let s = max_code_l1(&rules);
        let inf = compiled_queries(&rules, LabelUniverse::new(s)).expect("codes within universe");
        Self::from_parts(s, inf, Vec::new())
    }

    /// `𝒬_∞` and `𝒬_⊞` from one joint numbering of `𝔗_∞ ∪ 𝔗_⊞`.
    pub fn joint(sk: &SkeletonCodes) -> Self {
        let rules = precompile_rules(&t_full(sk));
        let s = max_code_l1(&rules);
        let all = compiled_queries(&rules, LabelUniverse::new(s)).expect("codes within universe");
        let n_inf = BASE_RULES + 2 * t_inf(sk).len();
        debug_assert_eq!(all.len(), n_inf + 2 * t_box(sk).len());
        let inf: Vec<NamedQuery> = all[..n_inf].to_vec();
        let mut boxed: Vec<NamedQuery> = all[..BASE_RULES].to_vec();
        boxed.extend_from_slice(&all[n_inf..]);
        Self::from_parts(s, inf, boxed)
    }

    fn from_parts(s: u32, inf: Vec<NamedQuery>, boxed: Vec<NamedQuery>) -> Self {
        let inf_tgds = tgds_of_queries(&inf).expect("uncolored queries");
        let box_tgds = tgds_of_queries(&boxed).expect("uncolored queries");
        QuerySetup {
            s,
            inf,
            boxed,
            inf_tgds,
            box_tgds,
        }
    }

    pub fn seed(&self) -> Structure {
        compile_swarm(&seed_swarm(), self.s)
    }

    /// `chase_n(𝒯_{𝒬_∞}, Sp_G)` with the per-stage atom counts kept.
    pub fn path_chase(&self, stages: usize) -> ChaseResult {
        let mut c = Chaser::new(&self.inf_tgds, self.seed());
        c.record_log = false;
        for _ in 0..stages {
            c.stage();
        }
        c.finish()
    }

    /// `chase(𝒯_{𝒬_⊞}, d)` within `budget` stages; the flag says whether a
    /// fixpoint was reached.
    pub fn box_closure(&self, d: &Structure, budget: usize) -> (Structure, bool) {
        let mut c = Chaser::new(&self.box_tgds, d.clone());
        c.record_log = false;
        c.run(budget);
        let fix = c.fixpoint;
        (c.structure, fix)
    }
}

/// Per-query views of `d`; a query over a predicate `d` lacks has an empty
/// view.
pub fn views(queries: &[NamedQuery], d: &Structure) -> Views {
    queries
        .iter()
        .map(|(n, q)| (n.clone(), eval_cq_named(q, d).unwrap_or_default()))
        .collect()
}

/// `dalt(d ↾ color)`.
pub fn daltonised_part(d: &Structure, color: Color) -> Structure {
    dalt(&restrict(d, color))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ViewDiff {
    /// `(query, tuple)` seen only on the first side.
    pub only_first: Vec<(String, Vec<String>)>,
    pub only_second: Vec<(String, Vec<String>)>,
}

impl ViewDiff {
    pub fn size(&self) -> usize {
        self.only_first.len() + self.only_second.len()
    }
}

pub fn diff_views(first: &Views, second: &Views) -> ViewDiff {
    let mut out = ViewDiff::default();
    let empty = BTreeSet::new();
    let names: BTreeSet<&String> = first.keys().chain(second.keys()).collect();
    for n in names {
        let x = first.get(n).unwrap_or(&empty);
        let y = second.get(n).unwrap_or(&empty);
        out.only_first
            .extend(x.difference(y).map(|t| (n.clone(), t.clone())));
        out.only_second
            .extend(y.difference(x).map(|t| (n.clone(), t.clone())));
    }
    out
}

/// Views of `dalt(d ↾ G)` against those of `dalt(d ↾ R)`.
pub fn green_red_difference(queries: &[NamedQuery], d: &Structure) -> ViewDiff {
    let g = views(queries, &daltonised_part(d, Color::Green));
    let r = views(queries, &daltonised_part(d, Color::Red));
    diff_views(&g, &r)
}

/// `chase^L_{2i}`: the atoms added at stages `i+1 ..= 2i`, with the
/// constants.  `run` must have at least `2i` stages.
pub fn late_fragment(run: &ChaseResult, i: usize) -> Structure {
    assert!(run.stages_run >= 2 * i, "chase too short for the late fragment");
    run.atoms_between(i, 2 * i)
}

#[derive(Debug, Clone, Serialize)]
pub struct ComponentReport {
    pub name: String,
    pub atoms: usize,
    /// Whether the `𝒯_{𝒬_⊞}` closure reached a fixpoint (grid variant).
    pub closed: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DyDnReport {
    pub i: usize,
    pub with_grids: bool,
    pub s: u32,
    pub components_y: Vec<ComponentReport>,
    pub components_n: Vec<ComponentReport>,
    pub view_sizes_y: BTreeMap<String, usize>,
    pub view_sizes_n: BTreeMap<String, usize>,
    /// `𝒬_∞` views of `D_y` against `D_n`.
    pub difference: ViewDiff,
    /// Green/red difference of the early chase and of the late fragment.
    pub early_difference: ViewDiff,
    pub late_difference: ViewDiff,
    pub y_has_full_spider: bool,
    pub n_has_full_spider: bool,
}

pub struct DyDn {
    pub dy: Structure,
    pub dn: Structure,
    pub report: DyDnReport,
}

/// Red part of the red spider with one green lower calf, at `(a, b)`.
fn gadget(code: u32, s: u32) -> Structure {
    let sp = make_spider(IdealSpider::red(None, Some(code)), s, "a", "b", "");
    daltonised_part(&sp, Color::Red)
}

/// Codes of the two gadgets `D_n` carries: the lower codes of the first
/// spider of path rules (II) and (III).
pub fn gadget_codes() -> [u32; 2] {
    // Path rule number k (from 2) owns lower codes 2k+1, 2k+2.
    [2 * 3 + 1, 2 * 4 + 1]
}

/// Builds `D_y` and `D_n` for `i`.  Without grids the path-only universe is
/// used; with grids, the joint one, and every component `𝒟` becomes
/// `chase(𝒯_{𝒬_⊞}, 𝒟)` before restriction.
pub fn build_dy_dn(sk: &SkeletonCodes, i: usize, with_grids: bool, grid_budget: usize) -> DyDn {
    assert!(i >= 1);
    let setup = if with_grids {
        QuerySetup::joint(sk)
    } else {
        QuerySetup::path_only(sk)
    };
    let run = setup.path_chase(2 * i);
    let early = run.prefix(i);
    let late = late_fragment(&run, i);
    let close = |d: &Structure| -> (Structure, Option<bool>) {
        if with_grids {
            let (c, fix) = setup.box_closure(d, grid_budget);
            (c, Some(fix))
        } else {
            (d.clone(), None)
        }
    };
    let (early, early_closed) = close(&early);
    let (late, late_closed) = close(&late);

    let mut dy = Structure::new();
    let mut dn = Structure::new();
    let mut comps_y = Vec::new();
    let mut comps_n = Vec::new();
    let push = |target: &mut Structure, log: &mut Vec<ComponentReport>, part: &Structure, name: &str, closed| {
        target.disjoint_union(part, &format!("{name}."));
        log.push(ComponentReport {
            name: name.to_string(),
            atoms: part.num_atoms(),
            closed,
        });
    };
    let early_g = daltonised_part(&early, Color::Green);
    let early_r = daltonised_part(&early, Color::Red);
    let late_g = daltonised_part(&late, Color::Green);
    let late_r = daltonised_part(&late, Color::Red);
    push(&mut dy, &mut comps_y, &early_g, "m", early_closed);
    push(&mut dn, &mut comps_n, &early_r, "m", early_closed);
    for k in 0..i {
        for (target, log) in [(&mut dy, &mut comps_y), (&mut dn, &mut comps_n)] {
            push(target, log, &late_g, &format!("lg{k}"), late_closed);
            push(target, log, &late_r, &format!("lr{k}"), late_closed);
        }
    }
    for code in gadget_codes() {
        push(&mut dn, &mut comps_n, &gadget(code, setup.s), &format!("sp{code}"), None);
    }

    let vy = views(&setup.inf, &dy);
    let vn = views(&setup.inf, &dn);
    let sizes = |v: &Views| v.iter().map(|(k, t)| (k.clone(), t.len())).collect();
    let spider = full_spider_query(setup.s);
    let report = DyDnReport {
        i,
        with_grids,
        s: setup.s,
        components_y: comps_y,
        components_n: comps_n,
        view_sizes_y: sizes(&vy),
        view_sizes_n: sizes(&vn),
        difference: diff_views(&vy, &vn),
        early_difference: green_red_difference(&setup.inf, &early),
        late_difference: green_red_difference(&setup.inf, &late),
        y_has_full_spider: exists_homomorphism(&spider.canonical, &dy, &[]),
        n_has_full_spider: exists_homomorphism(&spider.canonical, &dn, &[]),
    };
    DyDn { dy, dn, report }
}

#[derive(Debug, Clone, Serialize)]
pub struct ViewDifferenceReport {
    pub i: usize,
    pub path_difference: ViewDiff,
    /// After the `𝒯_{𝒬_⊞}` closure (joint universe only).
    pub box_difference_after_closure: Option<ViewDiff>,
    pub path_difference_after_closure: Option<ViewDiff>,
    pub closure_fixpoint: Option<bool>,
}

/// The view-difference claims for one `i`: in the path-only universe, and,
/// given the joint setup, after closing its path chase under `𝒯_{𝒬_⊞}`.
pub fn view_difference(
    path: &QuerySetup,
    joint: Option<&QuerySetup>,
    i: usize,
    budget: usize,
) -> ViewDifferenceReport {
    let run = path.path_chase(i);
    let mut out = ViewDifferenceReport {
        i,
        path_difference: green_red_difference(&path.inf, &run.structure),
        box_difference_after_closure: None,
        path_difference_after_closure: None,
        closure_fixpoint: None,
    };
    if let Some(joint) = joint {
        let run = joint.path_chase(i);
        let (closed, fix) = joint.box_closure(&run.structure, budget);
        out.box_difference_after_closure = Some(green_red_difference(&joint.boxed, &closed));
        out.path_difference_after_closure = Some(green_red_difference(&joint.inf, &closed));
        out.closure_fixpoint = Some(fix);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn late_fragment_one_is_stage_two() {
        let setup = QuerySetup::path_only(&SkeletonCodes::default());
        let run = setup.path_chase(2);
        let late = late_fragment(&run, 1);
        assert_eq!(late.num_atoms(), run.atoms_after_stage[2] - run.atoms_after_stage[1]);
    }

    #[test]
    fn joint_split_shares_the_base_triple() {
        let setup = QuerySetup::joint(&SkeletonCodes::default());
        assert_eq!(setup.s, 92);
        assert_eq!(setup.inf.len(), 9);
        assert_eq!(setup.boxed.len(), 3 + 82);
        assert_eq!(setup.inf[..3], setup.boxed[..3]);
    }
}
