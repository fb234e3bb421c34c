//! Tuple-generating dependencies and the staged lazy chase.
//!
//! A stage first collects every trigger `(dependency, frontier tuple)` that
//! holds in the structure as it was when the stage began, then applies them
//! one by one against the growing structure.  An application is skipped
//! when the head already has a witness (full homomorphism search, not a
//! syntactic lookup).

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::relcore::{
    exists_homomorphism, find_homomorphisms, paint_cq, satisfies_at, Color,
    ConjunctiveQuery, Elem, RelError, Structure,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChaseError {
    #[error(transparent)]
    Rel(#[from] RelError),
    #[error("frontier has {got} elements, dependency `{dep}` expects {want}")]
    FrontierArity { dep: String, got: usize, want: usize },
    #[error("frontier is not a match of the body of `{0}`")]
    NotAMatch(String),
    #[error("trigger log refers to unknown dependency `{0}`")]
    UnknownDependency(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "G->R")]
    GreenToRed,
    #[serde(rename = "R->G")]
    RedToGreen,
}

impl Direction {
    pub fn source(self) -> Color {
        match self {
            Direction::GreenToRed => Color::Green,
            Direction::RedToGreen => Color::Red,
        }
    }

    pub fn target(self) -> Color {
        self.source().opposite()
    }

    pub fn tag(self) -> &'static str {
        match self {
            Direction::GreenToRed => "G->R",
            Direction::RedToGreen => "R->G",
        }
    }
}

/// `body(x̄, ȳ) ⇒ ∃z̄ head(z̄, ȳ)`; the frontier `ȳ` is `body.free`, matched
/// position by position with `head.free`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dependency {
    pub id: String,
    pub body: ConjunctiveQuery,
    pub head: ConjunctiveQuery,
}

impl Dependency {
    pub fn frontier_len(&self) -> usize {
        self.body.free.len()
    }
}

/// The TGD `Q^{G→R}` or `Q^{R→G}` generated by an uncolored query.
pub fn tgd_from_cq(
    q: &ConjunctiveQuery,
    direction: Direction,
    id: &str,
) -> Result<Dependency, ChaseError> {
    let body = paint_cq(q, direction.source())?;
    let painted = paint_cq(q, direction.target())?;
    let free: BTreeSet<Elem> = q.free.iter().copied().collect();
    let canonical = painted.canonical.renamed_by_id(|e, name| {
        if free.contains(&e) {
            name.to_string()
        } else {
            format!("z.{name}")
        }
    });
    let head = ConjunctiveQuery {
        canonical,
        free: q.free.clone(),
    };
    Ok(Dependency {
        id: id.to_string(),
        body,
        head,
    })
}

/// Both TGDs of every query, in the order `q1 G→R, q1 R→G, q2 G→R, ...`.
pub fn tgds_of_queries(queries: &[(String, ConjunctiveQuery)]) -> Result<Vec<Dependency>, ChaseError> {
    let mut out = Vec::with_capacity(2 * queries.len());
    for (name, q) in queries {
        for dir in [Direction::GreenToRed, Direction::RedToGreen] {
            out.push(tgd_from_cq(q, dir, &format!("{name}^{}", dir.tag()))?);
        }
    }
    Ok(out)
}

/// Frontier tuples at which the body holds, sorted by element id.
pub fn triggers(d: &Structure, t: &Dependency) -> BTreeSet<Vec<Elem>> {
    find_homomorphisms(&t.body.canonical, d, &[])
        .map(|h| t.body.free.iter().map(|&v| h.apply(v)).collect())
        .collect()
}

/// Whether the head of `t` has a witness at `frontier`.
pub fn is_witnessed(d: &Structure, t: &Dependency, frontier: &[Elem]) -> bool {
    let seed: Vec<(Elem, Elem)> = t
        .head
        .free
        .iter()
        .copied()
        .zip(frontier.iter().copied())
        .collect();
    exists_homomorphism(&t.head.canonical, d, &seed)
}

/// Adds a fresh copy of the head at `frontier` unless it is witnessed.
/// Returns the created elements, or `None` for a no-op.
pub fn apply_in_place(
    d: &mut Structure,
    t: &Dependency,
    frontier: &[Elem],
    counter: &mut u64,
) -> Option<Vec<Elem>> {
    if is_witnessed(d, t, frontier) {
        return None;
    }
    let head = &t.head.canonical;
    let mut map: Vec<Option<Elem>> = vec![None; head.num_elements()];
    for (&v, &e) in t.head.free.iter().zip(frontier) {
        map[v as usize] = Some(e);
    }
    let mut created = Vec::new();
    for v in head.elements() {
        if map[v as usize].is_some() {
            continue;
        }
        let e = if head.is_constant(v) {
            d.add_constant(head.name(v))
        } else {
            let name = d.fresh_name("_n", counter);
            let e = d.add_element(&name);
            created.push(e);
            e
        };
        map[v as usize] = Some(e);
    }
    add_image(d, head, &map);
    Some(created)
}

fn add_image(d: &mut Structure, src: &Structure, map: &[Option<Elem>]) {
    let mut buf: Vec<Elem> = Vec::new();
    for (p, args) in src.atoms() {
        let dp = d
            .declare_predicate(src.pred_name(p), src.pred_arity(p))
            .expect("dependency heads agree with the structure on arities");
        buf.clear();
        buf.extend(args.iter().map(|&a| map[a as usize].expect("every head element mapped")));
        d.add_atom_ids(dp, &buf);
    }
}

/// Single application as a pure function; checks the match first.
pub fn apply_tgd(
    d: &Structure,
    t: &Dependency,
    frontier: &[Elem],
    counter: &mut u64,
) -> Result<Structure, ChaseError> {
    if frontier.len() != t.frontier_len() {
        return Err(ChaseError::FrontierArity {
            dep: t.id.clone(),
            got: frontier.len(),
            want: t.frontier_len(),
        });
    }
    if !satisfies_at(&t.body, d, frontier) {
        return Err(ChaseError::NotAMatch(t.id.clone()));
    }
    let mut out = d.clone();
    apply_in_place(&mut out, t, frontier, counter);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriggerRecord {
    pub stage: usize,
    pub dependency: String,
    pub frontier: Vec<String>,
    pub created: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ChaseResult {
    pub structure: Structure,
    pub stages_run: usize,
    pub reached_fixpoint: bool,
    pub trigger_log: Vec<TriggerRecord>,
    /// Next value of the fresh-name counter.
    pub counter: u64,
    /// Number of atoms after each stage; entry 0 is the input.
    pub atoms_after_stage: Vec<usize>,
}

impl ChaseResult {
    pub fn log_jsonl(&self) -> String {
        let mut s = String::new();
        for r in &self.trigger_log {
            s.push_str(&serde_json::to_string(r).expect("records serialize"));
            s.push('\n');
        }
        s
    }

    /// Atoms added at stages `from+1 ..= to`, with constants kept.
    pub fn atoms_between(&self, from: usize, to: usize) -> Structure {
        let lo = self.atoms_after_stage[from];
        let hi = self.atoms_after_stage[to];
        slice_atoms(&self.structure, lo, hi)
    }

    pub fn prefix(&self, stage: usize) -> Structure {
        slice_atoms(&self.structure, 0, self.atoms_after_stage[stage])
    }
}

/// The atoms with insertion index in `lo..hi`, plus all constants.
pub fn slice_atoms(d: &Structure, lo: usize, hi: usize) -> Structure {
    let mut out = Structure::new();
    for c in d.constants() {
        out.add_constant(d.name(c));
    }
    for idx in lo..hi {
        let (p, args) = d.atom(idx as u32);
        let names: Vec<&str> = args.iter().map(|&e| d.name(e)).collect();
        out.add_atom(d.pred_name(p), &names).expect("arity inherited");
    }
    out
}

/// Incremental chase driver.
pub struct Chaser<'a> {
    pub deps: &'a [Dependency],
    pub structure: Structure,
    pub counter: u64,
    pub stages_run: usize,
    pub log: Vec<TriggerRecord>,
    pub atoms_after_stage: Vec<usize>,
    pub fixpoint: bool,
    pub record_log: bool,
}

impl<'a> Chaser<'a> {
    pub fn new(deps: &'a [Dependency], d: Structure) -> Self {
        let n = d.num_atoms();
        Chaser {
            deps,
            structure: d,
            counter: 0,
            stages_run: 0,
            log: Vec::new(),
            atoms_after_stage: vec![n],
            fixpoint: false,
            record_log: true,
        }
    }

    /// One stage; returns whether anything was added.
    pub fn stage(&mut self) -> bool {
        let _ = self.stage_with_filter(|_, _, _| true);
        !self.fixpoint
    }

    /// One stage where only triggers accepted by `keep` are applied.
    pub fn stage_with_filter(
        &mut self,
        mut keep: impl FnMut(&Structure, usize, &[Elem]) -> bool,
    ) -> usize {
        let found: Vec<(usize, Vec<Elem>)> = self
            .deps
            .iter()
            .enumerate()
            .flat_map(|(i, t)| {
                triggers(&self.structure, t)
                    .into_iter()
                    .map(move |tuple| (i, tuple))
            })
            .filter(|(i, tuple)| keep(&self.structure, *i, tuple))
            .collect();
        let stage = self.stages_run + 1;
        let mut applied = 0;
        for (i, tuple) in found {
            let t = &self.deps[i];
            if let Some(created) = apply_in_place(&mut self.structure, t, &tuple, &mut self.counter) {
                applied += 1;
                if self.record_log {
                    let d = &self.structure;
                    self.log.push(TriggerRecord {
                        stage,
                        dependency: t.id.clone(),
                        frontier: tuple.iter().map(|&e| d.name(e).to_string()).collect(),
                        created: created.iter().map(|&e| d.name(e).to_string()).collect(),
                    });
                }
            }
        }
        self.stages_run = stage;
        self.atoms_after_stage.push(self.structure.num_atoms());
        self.fixpoint = applied == 0;
        applied
    }

    pub fn run(&mut self, budget: usize) {
        for _ in 0..budget {
            if !self.stage() {
                break;
            }
        }
    }

    pub fn finish(self) -> ChaseResult {
        ChaseResult {
            structure: self.structure,
            stages_run: self.stages_run,
            reached_fixpoint: self.fixpoint,
            trigger_log: self.log,
            counter: self.counter,
            atoms_after_stage: self.atoms_after_stage,
        }
    }
}

/// One chase stage; returns the new structure and whether it changed.
pub fn chase_stage(ts: &[Dependency], d: &Structure) -> (Structure, bool) {
    let mut c = Chaser::new(ts, d.clone());
    c.record_log = false;
    let changed = c.stage();
    (c.structure, changed)
}

/// Runs stages until nothing is added or the budget is spent.
pub fn chase(ts: &[Dependency], d: &Structure, stage_budget: usize) -> ChaseResult {
    let mut c = Chaser::new(ts, d.clone());
    c.run(stage_budget);
    if stage_budget == 0 || !c.fixpoint {
        // Report a fixpoint only when it has been observed or is evident.
        c.fixpoint = first_violation(ts, &c.structure).is_none();
    }
    c.finish()
}

/// Re-applies a trigger log to the input, reusing the recorded names.
pub fn replay(ts: &[Dependency], d: &Structure, log: &[TriggerRecord]) -> Result<Structure, ChaseError> {
    let mut out = d.clone();
    for r in log {
        let t = ts
            .iter()
            .find(|t| t.id == r.dependency)
            .ok_or_else(|| ChaseError::UnknownDependency(r.dependency.clone()))?;
        let frontier: Vec<Elem> = r
            .frontier
            .iter()
            .map(|n| out.lookup(n).ok_or_else(|| RelError::UnknownElement(n.clone())))
            .collect::<Result<_, _>>()?;
        let head = &t.head.canonical;
        let mut map: Vec<Option<Elem>> = vec![None; head.num_elements()];
        for (&v, &e) in t.head.free.iter().zip(&frontier) {
            map[v as usize] = Some(e);
        }
        let mut fresh = r.created.iter();
        for v in head.elements() {
            if map[v as usize].is_some() {
                continue;
            }
            map[v as usize] = Some(if head.is_constant(v) {
                out.add_constant(head.name(v))
            } else {
                let n = fresh
                    .next()
                    .ok_or_else(|| ChaseError::NotAMatch(t.id.clone()))?;
                out.add_element(n)
            });
        }
        add_image(&mut out, head, &map);
    }
    Ok(out)
}

/// The first `(dependency index, frontier)` whose head is not witnessed.
pub fn first_violation(ts: &[Dependency], d: &Structure) -> Option<(usize, Vec<Elem>)> {
    ts.iter().enumerate().find_map(|(i, t)| {
        triggers(d, t)
            .into_iter()
            .find(|tuple| !is_witnessed(d, t, tuple))
            .map(|tuple| (i, tuple))
    })
}

pub fn all_violations(ts: &[Dependency], d: &Structure) -> Vec<(usize, Vec<Elem>)> {
    let mut out = Vec::new();
    for (i, t) in ts.iter().enumerate() {
        for tuple in triggers(d, t) {
            if !is_witnessed(d, t, &tuple) {
                out.push((i, tuple));
            }
        }
    }
    out
}

pub fn satisfies_all(ts: &[Dependency], d: &Structure) -> bool {
    first_violation(ts, d).is_none()
}

/// Whether `G(q)(d) = R(q)(d)` for every query.
pub fn green_red_views_agree(queries: &[ConjunctiveQuery], d: &Structure) -> Result<bool, ChaseError> {
    for q in queries {
        let g = crate::relcore::eval_cq(&paint_cq(q, Color::Green)?, d).unwrap_or_default();
        let r = crate::relcore::eval_cq(&paint_cq(q, Color::Red)?, d).unwrap_or_default();
        if g != r {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterminacyCheck {
    /// False exactly when a counterexample to the green-to-red transfer of
    /// `q0` was found in a model of the generated TGDs.
    pub holds: bool,
    pub satisfies_tgds: bool,
    pub witness: Option<Vec<String>>,
}

/// Checks, for one structure, that a green match of `q0` has a red twin,
/// provided the structure satisfies every TGD generated by `queries`.
pub fn check_determinacy_condition(
    queries: &[ConjunctiveQuery],
    q0: &ConjunctiveQuery,
    d: &Structure,
) -> Result<DeterminacyCheck, ChaseError> {
    let named: Vec<(String, ConjunctiveQuery)> = queries
        .iter()
        .enumerate()
        .map(|(i, q)| (format!("q{i}"), q.clone()))
        .collect();
    let ts = tgds_of_queries(&named)?;
    let model = satisfies_all(&ts, d);
    if !model {
        return Ok(DeterminacyCheck {
            holds: true,
            satisfies_tgds: false,
            witness: None,
        });
    }
    let green = paint_cq(q0, Color::Green)?;
    let red = paint_cq(q0, Color::Red)?;
    // A query predicate missing from `d` just means an empty view.
    let gview = crate::relcore::eval_cq(&green, d).unwrap_or_default();
    for tuple in gview {
        if !satisfies_at(&red, d, &tuple) {
            return Ok(DeterminacyCheck {
                holds: false,
                satisfies_tgds: true,
                witness: Some(tuple.iter().map(|&e| d.name(e).to_string()).collect()),
            });
        }
    }
    Ok(DeterminacyCheck {
        holds: true,
        satisfies_tgds: true,
        witness: None,
    })
}


#[cfg(test)]
mod tests {
    use super::*;

    fn q(atoms: &[(&str, &[&str])], free: &[&str]) -> ConjunctiveQuery {
        let mut s = Structure::new();
        for (p, a) in atoms {
            s.add_atom(p, a).unwrap();
        }
        ConjunctiveQuery::new(s, free).unwrap()
    }

    #[test]
    fn generated_tgd_shape() {
        let query = q(&[("E", &["x", "y"])], &["x"]);
        let t = tgd_from_cq(&query, Direction::GreenToRed, "e").unwrap();
        assert!(t.body.canonical.has_atom("G:E", &["x", "y"]));
        assert!(t.head.canonical.has_atom("R:E", &["x", "z.y"]));
        assert_eq!(t.head.free_names(), vec!["x"]);
        let ts = tgds_of_queries(&[("e".into(), query)]).unwrap();
        assert_eq!(ts.len(), 2);
    }

    #[test]
    fn lazy_application() {
        let mut body = Structure::new();
        body.add_atom("E", &["x"]).unwrap();
        let mut head = Structure::new();
        head.add_atom("F", &["x", "y"]).unwrap();
        let t = Dependency {
            id: "t".into(),
            body: ConjunctiveQuery::new(body, &["x"]).unwrap(),
            head: ConjunctiveQuery::new(head, &["x"]).unwrap(),
        };
        let mut d = Structure::new();
        d.add_atom("E", &["a"]).unwrap();
        let mut counter = 0;
        let d1 = apply_tgd(&d, &t, &[0], &mut counter).unwrap();
        assert_eq!(d1.num_atoms(), 2);
        assert!(d1.has_atom("F", &["a", "_n0"]));
        let d2 = apply_tgd(&d1, &t, &[0], &mut counter).unwrap();
        assert_eq!(d2, d1);
        assert!(apply_tgd(&d, &t, &[0, 0], &mut counter).is_err());

        let res = chase(&[t.clone()], &d, 5);
        assert!(res.reached_fixpoint);
        assert_eq!(res.stages_run, 2);
        assert_eq!(replay(&[t], &d, &res.trigger_log).unwrap(), res.structure);
    }

    #[test]
    fn empty_dependency_set_is_a_fixpoint() {
        let mut d = Structure::new();
        d.add_atom("P", &["a"]).unwrap();
        let res = chase(&[], &d, 0);
        assert!(res.reached_fixpoint);
        assert_eq!(res.stages_run, 0);
        let (same, changed) = chase_stage(&[], &d);
        assert!(!changed);
        assert_eq!(same, d);
    }

    #[test]
    fn query_in_view_set_is_determined() {
        let query = q(&[("E", &["x", "y"])], &["x"]);
        let ts = tgds_of_queries(&[("e".into(), query.clone())]).unwrap();
        let mut d = Structure::new();
        d.add_atom("G:E", &["a", "b"]).unwrap();
        let d = chase(&ts, &d, 10).structure;
        let r = check_determinacy_condition(&[query.clone()], &query, &d).unwrap();
        assert!(r.holds && r.satisfies_tgds);
    }
}
