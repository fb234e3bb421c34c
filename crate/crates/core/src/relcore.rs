//! Finite relational structures, homomorphism search and conjunctive queries.
//!
//! Elements and predicates are interned per structure: an [`Elem`] is an index
//! into the structure's own name table.  Constants are identified across
//! structures by name, so combining two structures glues their constants and
//! nothing else (see [`Structure::absorb`] and [`Structure::disjoint_union`]).
//!
//! Colored predicates are spelled `G:pred` / `R:pred`.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

pub type Elem = u32;
pub type PredId = u32;

type Args = SmallVec<[Elem; 4]>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RelError {
    #[error("predicate `{0}` used with arity {1}, declared with arity {2}")]
    ArityMismatch(String, usize, usize),
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),
    #[error("structure is already colored (predicate `{0}`)")]
    AlreadyColored(String),
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("malformed structure: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Color {
    #[serde(rename = "G")]
    Green,
    #[serde(rename = "R")]
    Red,
}

impl Color {
    pub fn opposite(self) -> Color {
        match self {
            Color::Green => Color::Red,
            Color::Red => Color::Green,
        }
    }

    pub fn prefix(self) -> &'static str {
        match self {
            Color::Green => "G:",
            Color::Red => "R:",
        }
    }

    pub fn letter(self) -> char {
        match self {
            Color::Green => 'G',
            Color::Red => 'R',
        }
    }
}

/// Splits a predicate name into its color (if any) and the bare name.
pub fn split_color(pred: &str) -> (Option<Color>, &str) {
    if let Some(rest) = pred.strip_prefix("G:") {
        (Some(Color::Green), rest)
    } else if let Some(rest) = pred.strip_prefix("R:") {
        (Some(Color::Red), rest)
    } else {
        (None, pred)
    }
}

pub fn colored(color: Color, pred: &str) -> String {
    format!("{}{}", color.prefix(), pred)
}

/// Predicate symbols with arities plus constant symbols.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub predicates: BTreeMap<String, usize>,
    pub constants: BTreeSet<String>,
}

impl Signature {
    /// Whether every predicate and constant of `self` is also in `other`
    /// with the same arity.
    pub fn compatible_with(&self, other: &Signature) -> Result<(), RelError> {
        for (p, &a) in &self.predicates {
            if let Some(&b) = other.predicates.get(p) {
                if a != b {
                    return Err(RelError::ArityMismatch(p.clone(), a, b));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct PredInfo {
    name: String,
    arity: usize,
}

/// A finite set of positive atoms over named elements.
#[derive(Clone, Default)]
pub struct Structure {
    names: Vec<String>,
    name_index: HashMap<String, Elem>,
    is_const: Vec<bool>,
    preds: Vec<PredInfo>,
    pred_index: HashMap<String, PredId>,
    atom_preds: Vec<PredId>,
    atom_args: Vec<Args>,
    atom_set: HashSet<(PredId, Args)>,
    by_pred: Vec<Vec<u32>>,
    by_pos: HashMap<(PredId, u32, Elem), Vec<u32>>,
    by_elem: Vec<Vec<u32>>,
}

impl fmt::Debug for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Structure {{ ")?;
        for (i, (p, args)) in self.atoms().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}(", self.pred_name(p))?;
            for (j, e) in args.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", self.name(*e))?;
            }
            write!(f, ")")?;
        }
        write!(f, " }}")
    }
}

impl Structure {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_elements(&self) -> usize {
        self.names.len()
    }

    pub fn num_atoms(&self) -> usize {
        self.atom_preds.len()
    }

    pub fn elements(&self) -> impl Iterator<Item = Elem> + '_ {
        0..self.names.len() as Elem
    }

    pub fn name(&self, e: Elem) -> &str {
        &self.names[e as usize]
    }

    pub fn lookup(&self, name: &str) -> Option<Elem> {
        self.name_index.get(name).copied()
    }

    pub fn is_constant(&self, e: Elem) -> bool {
        self.is_const[e as usize]
    }

    pub fn constants(&self) -> impl Iterator<Item = Elem> + '_ {
        self.elements().filter(move |&e| self.is_const[e as usize])
    }

    /// Interns an element by name (no-op when it already exists).
    pub fn add_element(&mut self, name: &str) -> Elem {
        if let Some(&e) = self.name_index.get(name) {
            return e;
        }
        let e = self.names.len() as Elem;
        self.names.push(name.to_string());
        self.name_index.insert(name.to_string(), e);
        self.is_const.push(false);
        self.by_elem.push(Vec::new());
        e
    }

    pub fn add_constant(&mut self, name: &str) -> Elem {
        let e = self.add_element(name);
        self.is_const[e as usize] = true;
        e
    }

    pub fn declare_predicate(&mut self, name: &str, arity: usize) -> Result<PredId, RelError> {
        if let Some(&p) = self.pred_index.get(name) {
            let have = self.preds[p as usize].arity;
            if have != arity {
                return Err(RelError::ArityMismatch(name.to_string(), arity, have));
            }
            return Ok(p);
        }
        let p = self.preds.len() as PredId;
        self.preds.push(PredInfo {
            name: name.to_string(),
            arity,
        });
        self.pred_index.insert(name.to_string(), p);
        self.by_pred.push(Vec::new());
        Ok(p)
    }

    pub fn pred_id(&self, name: &str) -> Option<PredId> {
        self.pred_index.get(name).copied()
    }

    pub fn pred_name(&self, p: PredId) -> &str {
        &self.preds[p as usize].name
    }

    pub fn pred_arity(&self, p: PredId) -> usize {
        self.preds[p as usize].arity
    }

    pub fn predicates(&self) -> impl Iterator<Item = PredId> + '_ {
        0..self.preds.len() as PredId
    }

    pub fn signature(&self) -> Signature {
        Signature {
            predicates: self
                .preds
                .iter()
                .map(|p| (p.name.clone(), p.arity))
                .collect(),
            constants: self.constants().map(|c| self.name(c).to_string()).collect(),
        }
    }

    /// Adds an atom over existing elements. Returns `true` when it is new.
    pub fn add_atom_ids(&mut self, p: PredId, args: &[Elem]) -> bool {
        debug_assert_eq!(self.preds[p as usize].arity, args.len());
        let key: Args = args.iter().copied().collect();
        if self.atom_set.contains(&(p, key.clone())) {
            return false;
        }
        let idx = self.atom_preds.len() as u32;
        self.atom_set.insert((p, key.clone()));
        self.atom_preds.push(p);
        for (pos, &e) in args.iter().enumerate() {
            self.by_pos.entry((p, pos as u32, e)).or_default().push(idx);
            let list = &mut self.by_elem[e as usize];
            if list.last() != Some(&idx) {
                list.push(idx);
            }
        }
        self.atom_args.push(key);
        self.by_pred[p as usize].push(idx);
        true
    }

    /// Adds an atom by names, declaring the predicate and elements on demand.
    pub fn add_atom(&mut self, pred: &str, args: &[&str]) -> Result<bool, RelError> {
        let p = self.declare_predicate(pred, args.len())?;
        let ids: Args = args.iter().map(|a| self.add_element(a)).collect();
        Ok(self.add_atom_ids(p, &ids))
    }

    pub fn has_atom_ids(&self, p: PredId, args: &[Elem]) -> bool {
        let key: Args = args.iter().copied().collect();
        self.atom_set.contains(&(p, key))
    }

    pub fn has_atom(&self, pred: &str, args: &[&str]) -> bool {
        let Some(p) = self.pred_id(pred) else {
            return false;
        };
        let mut ids = Args::new();
        for a in args {
            match self.lookup(a) {
                Some(e) => ids.push(e),
                None => return false,
            }
        }
        self.has_atom_ids(p, &ids)
    }

    pub fn atom(&self, idx: u32) -> (PredId, &[Elem]) {
        (self.atom_preds[idx as usize], &self.atom_args[idx as usize])
    }

    /// Atoms in insertion order.
    pub fn atoms(&self) -> impl Iterator<Item = (PredId, &[Elem])> + '_ {
        self.atom_preds
            .iter()
            .zip(self.atom_args.iter())
            .map(|(&p, a)| (p, a.as_slice()))
    }

    pub fn atoms_of(&self, p: PredId) -> &[u32] {
        &self.by_pred[p as usize]
    }

    pub fn atoms_at(&self, p: PredId, pos: usize, e: Elem) -> &[u32] {
        self.by_pos
            .get(&(p, pos as u32, e))
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    pub fn atoms_touching(&self, e: Elem) -> &[u32] {
        &self.by_elem[e as usize]
    }

    pub fn count_pred(&self, name: &str) -> usize {
        self.pred_id(name).map_or(0, |p| self.by_pred[p as usize].len())
    }

    /// Atoms rendered as `(pred, [names])`, sorted; handy for set comparisons.
    pub fn atom_strings(&self) -> BTreeSet<(String, Vec<String>)> {
        self.atoms()
            .map(|(p, args)| {
                (
                    self.pred_name(p).to_string(),
                    args.iter().map(|&e| self.name(e).to_string()).collect(),
                )
            })
            .collect()
    }

    /// Copies every atom and element of `other` into `self`, matching
    /// elements by name. Returns the element translation.
    pub fn absorb(&mut self, other: &Structure) -> Vec<Elem> {
        let map: Vec<Elem> = other
            .elements()
            .map(|e| {
                if other.is_constant(e) {
                    self.add_constant(other.name(e))
                } else {
                    self.add_element(other.name(e))
                }
            })
            .collect();
        self.absorb_with(other, &map);
        map
    }

    fn absorb_with(&mut self, other: &Structure, map: &[Elem]) {
        let pmap: Vec<PredId> = other
            .preds
            .iter()
            .map(|pi| {
                self.declare_predicate(&pi.name, pi.arity)
                    .expect("arity clash while combining structures")
            })
            .collect();
        let mut buf = Args::new();
        for (p, args) in other.atoms() {
            buf.clear();
            buf.extend(args.iter().map(|&e| map[e as usize]));
            self.add_atom_ids(pmap[p as usize], &buf);
        }
    }

    /// Adds a copy of `other` whose non-constant elements are renamed apart
    /// with `prefix`; constants are shared.
    pub fn disjoint_union(&mut self, other: &Structure, prefix: &str) -> Vec<Elem> {
        let map: Vec<Elem> = other
            .elements()
            .map(|e| {
                if other.is_constant(e) {
                    self.add_constant(other.name(e))
                } else {
                    let name = format!("{}{}", prefix, other.name(e));
                    self.add_element(&name)
                }
            })
            .collect();
        self.absorb_with(other, &map);
        map
    }

    /// Keeps the atoms accepted by `keep`; elements shrink to those occurring
    /// in kept atoms plus all constants.
    pub fn filter_atoms(&self, mut keep: impl FnMut(&str, &[&str]) -> bool) -> Structure {
        let mut out = Structure::new();
        for c in self.constants() {
            out.add_constant(self.name(c));
        }
        for (p, args) in self.atoms() {
            let names: Vec<&str> = args.iter().map(|&e| self.name(e)).collect();
            if keep(self.pred_name(p), &names) {
                out.add_atom(self.pred_name(p), &names)
                    .expect("arity is inherited");
            }
        }
        out
    }

    /// The structure with every element renamed by `f` (constants keep
    /// their names).
    pub fn renamed(&self, mut f: impl FnMut(&str) -> String) -> Structure {
        let mut out = Structure::new();
        let map: Vec<Elem> = self
            .elements()
            .map(|e| {
                if self.is_constant(e) {
                    out.add_constant(self.name(e))
                } else {
                    out.add_element(&f(self.name(e)))
                }
            })
            .collect();
        out.absorb_with(self, &map);
        out
    }

    /// Renames non-constant elements by `f(id, name)`, keeping ids stable.
    /// `f` must be injective on the renamed elements.
    pub fn renamed_by_id(&self, mut f: impl FnMut(Elem, &str) -> String) -> Structure {
        let mut out = Structure::new();
        for e in self.elements() {
            if self.is_constant(e) {
                out.add_constant(self.name(e));
            } else {
                let id = out.add_element(&f(e, self.name(e)));
                assert_eq!(id, e, "renaming must be injective");
            }
        }
        let map: Vec<Elem> = self.elements().collect();
        out.absorb_with(self, &map);
        out
    }

    /// A name not yet used in this structure, of the form `<prefix><n>`
    /// with `n >= *counter`; advances the counter.
    pub fn fresh_name(&self, prefix: &str, counter: &mut u64) -> String {
        loop {
            let name = format!("{}{}", prefix, counter);
            *counter += 1;
            if !self.name_index.contains_key(&name) {
                return name;
            }
        }
    }
}

impl PartialEq for Structure {
    fn eq(&self, other: &Self) -> bool {
        let cs = |s: &Structure| -> BTreeSet<String> {
            s.constants().map(|c| s.name(c).to_string()).collect()
        };
        let es = |s: &Structure| -> BTreeSet<String> { s.names.iter().cloned().collect() };
        self.atom_strings() == other.atom_strings() && cs(self) == cs(other) && es(self) == es(other)
    }
}

// ---------------------------------------------------------------------------
// JSON

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct StructureJson {
    pub signature: Signature,
    pub elements: Vec<String>,
    pub atoms: Vec<(String, Vec<String>)>,
    pub constants: BTreeMap<String, String>,
}

impl Structure {
    pub fn to_json(&self) -> StructureJson {
        StructureJson {
            signature: self.signature(),
            elements: self.names.clone(),
            atoms: self
                .atoms()
                .map(|(p, args)| {
                    (
                        self.pred_name(p).to_string(),
                        args.iter().map(|&e| self.name(e).to_string()).collect(),
                    )
                })
                .collect(),
            constants: self
                .constants()
                .map(|c| (self.name(c).to_string(), self.name(c).to_string()))
                .collect(),
        }
    }

    pub fn from_json(j: &StructureJson) -> Result<Structure, RelError> {
        let mut s = Structure::new();
        for (p, &a) in &j.signature.predicates {
            s.declare_predicate(p, a)?;
        }
        for (c, e) in &j.constants {
            if c != e {
                return Err(RelError::Malformed(format!(
                    "constant `{c}` must be bound to an element of the same name, got `{e}`"
                )));
            }
            s.add_constant(c);
        }
        for c in &j.signature.constants {
            s.add_constant(c);
        }
        for e in &j.elements {
            s.add_element(e);
        }
        for (p, args) in &j.atoms {
            let refs: Vec<&str> = args.iter().map(|x| x.as_str()).collect();
            s.add_atom(p, &refs)?;
        }
        Ok(s)
    }
}

// ---------------------------------------------------------------------------
// Homomorphisms

/// A mapping from source elements to target elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Homomorphism {
    pub mapping: Vec<Elem>,
}

impl Homomorphism {
    pub fn apply(&self, e: Elem) -> Elem {
        self.mapping[e as usize]
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &Homomorphism) -> Homomorphism {
        Homomorphism {
            mapping: self.mapping.iter().map(|&e| other.apply(e)).collect(),
        }
    }

    /// Checks the defining property against a concrete pair of structures.
    pub fn is_valid(&self, source: &Structure, target: &Structure) -> bool {
        if self.mapping.len() != source.num_elements() {
            return false;
        }
        for c in source.constants() {
            if target.name(self.apply(c)) != source.name(c) {
                return false;
            }
        }
        let mut buf = Args::new();
        for (p, args) in source.atoms() {
            let Some(tp) = target.pred_id(source.pred_name(p)) else {
                return false;
            };
            buf.clear();
            buf.extend(args.iter().map(|&e| self.apply(e)));
            if !target.has_atom_ids(tp, &buf) {
                return false;
            }
        }
        true
    }
}

#[derive(Clone, Copy)]
enum Step {
    Atom(u32),
    Free(Elem),
}

#[derive(Clone, Copy)]
enum Cands<'a> {
    Slice(&'a [u32]),
    Range(u32),
}

impl Cands<'_> {
    fn len(&self) -> usize {
        match self {
            Cands::Slice(s) => s.len(),
            Cands::Range(n) => *n as usize,
        }
    }
    fn get(&self, i: usize) -> u32 {
        match self {
            Cands::Slice(s) => s[i],
            Cands::Range(_) => i as u32,
        }
    }
}

struct Frame<'a> {
    cands: Cands<'a>,
    next: usize,
    bound: SmallVec<[Elem; 4]>,
}

/// Lazy enumeration of homomorphisms extending a seed.
///
/// Source atoms are visited in a fixed plan: at each point the atom with the
/// most already-bound positions goes first (ties by fewer target atoms of
/// that predicate, then by source order).  Candidates for an atom come from
/// the `(predicate, position, element)` index of its most selective bound
/// position.
pub struct HomSearch<'a> {
    source: &'a Structure,
    target: &'a Structure,
    plan: Vec<Step>,
    pmap: Vec<Option<PredId>>,
    assign: Vec<Option<Elem>>,
    used: Vec<bool>,
    injective: bool,
    frames: Vec<Frame<'a>>,
    started: bool,
    dead: bool,
}

impl<'a> HomSearch<'a> {
    pub fn new(
        source: &'a Structure,
        target: &'a Structure,
        seed: &[(Elem, Elem)],
        injective: bool,
    ) -> HomSearch<'a> {
        let n = source.num_elements();
        let mut assign: Vec<Option<Elem>> = vec![None; n];
        let mut used = vec![false; target.num_elements()];
        let mut dead = false;
        for &(s, t) in seed {
            match assign[s as usize] {
                Some(prev) if prev != t => dead = true,
                _ => {}
            }
            assign[s as usize] = Some(t);
        }
        for c in source.constants() {
            match target.lookup(source.name(c)) {
                Some(t) => match assign[c as usize] {
                    Some(prev) if prev != t => dead = true,
                    _ => assign[c as usize] = Some(t),
                },
                None => dead = true,
            }
        }
        if injective {
            for a in assign.iter().flatten() {
                if used[*a as usize] {
                    dead = true;
                }
                used[*a as usize] = true;
            }
        }
        let pmap: Vec<Option<PredId>> = source
            .preds
            .iter()
            .map(|pi| {
                target
                    .pred_id(&pi.name)
                    .filter(|&tp| target.pred_arity(tp) == pi.arity)
            })
            .collect();
        for (p, _) in source.atoms() {
            if pmap[p as usize].is_none() {
                dead = true;
            }
        }
        let plan = if dead {
            Vec::new()
        } else {
            Self::make_plan(source, target, &assign, &pmap)
        };
        HomSearch {
            source,
            target,
            plan,
            pmap,
            assign,
            used,
            injective,
            frames: Vec::new(),
            started: false,
            dead,
        }
    }

    fn make_plan(
        source: &Structure,
        target: &Structure,
        assign: &[Option<Elem>],
        pmap: &[Option<PredId>],
    ) -> Vec<Step> {
        let mut bound: Vec<bool> = assign.iter().map(|a| a.is_some()).collect();
        // Constants are bound by name but usually far less selective than a
        // join variable, so atoms reached through a join go first.
        let mut strong: Vec<bool> = source
            .elements()
            .map(|e| bound[e as usize] && !source.is_constant(e))
            .collect();
        let natoms = source.num_atoms();
        let mut done = vec![false; natoms];
        let mut plan = Vec::with_capacity(natoms + 4);
        let count = |i: usize, f: &[bool]| -> usize {
            let (_, args) = source.atom(i as u32);
            args.iter().filter(|&&e| f[e as usize]).count()
        };
        let mut nbound: Vec<usize> = (0..natoms).map(|i| count(i, &bound)).collect();
        let mut nstrong: Vec<usize> = (0..natoms).map(|i| count(i, &strong)).collect();
        // Candidate count estimate: exact for positions known at plan time.
        let size = |i: usize| -> usize {
            let (p, args) = source.atom(i as u32);
            let Some(tp) = pmap[p as usize] else { return 0 };
            let mut best = target.atoms_of(tp).len();
            for (pos, &e) in args.iter().enumerate() {
                if let Some(t) = assign[e as usize] {
                    best = best.min(target.atoms_at(tp, pos, t).len());
                }
            }
            best
        };
        let sizes: Vec<usize> = (0..natoms).map(size).collect();
        for _ in 0..natoms {
            let mut best: Option<((usize, usize, usize), usize)> = None;
            for i in 0..natoms {
                if done[i] {
                    continue;
                }
                let (_, args) = source.atom(i as u32);
                let class = if nstrong[i] > 0 || args.is_empty() {
                    0
                } else if nbound[i] > 0 {
                    1
                } else {
                    2
                };
                let key = (class, args.len() - nbound[i], sizes[i]);
                if best.map_or(true, |(k, _)| key < k) {
                    best = Some((key, i));
                }
            }
            let (_, i) = best.expect("an unplanned atom remains");
            done[i] = true;
            plan.push(Step::Atom(i as u32));
            let (_, args) = source.atom(i as u32);
            let fresh: BTreeSet<Elem> = args
                .iter()
                .copied()
                .filter(|&e| !strong[e as usize] && !source.is_constant(e))
                .collect();
            for e in fresh {
                let was_bound = bound[e as usize];
                bound[e as usize] = true;
                strong[e as usize] = true;
                for &j in source.atoms_touching(e) {
                    let (_, jargs) = source.atom(j);
                    let k = jargs.iter().filter(|&&x| x == e).count();
                    if !was_bound {
                        nbound[j as usize] += k;
                    }
                    nstrong[j as usize] += k;
                }
            }
        }
        for e in source.elements() {
            if !bound[e as usize] {
                plan.push(Step::Free(e));
            }
        }
        plan
    }

    fn candidates(&self, step: Step) -> Cands<'a> {
        match step {
            Step::Free(_) => Cands::Range(self.target.num_elements() as u32),
            Step::Atom(i) => {
                let (p, args) = self.source.atom(i);
                let tp = self.pmap[p as usize].expect("checked at construction");
                let mut best: &'a [u32] = self.target.atoms_of(tp);
                for (pos, &e) in args.iter().enumerate() {
                    if let Some(t) = self.assign[e as usize] {
                        let s = self.target.atoms_at(tp, pos, t);
                        if s.len() < best.len() {
                            best = s;
                        }
                    }
                }
                Cands::Slice(best)
            }
        }
    }

    /// Tries to extend the assignment with candidate `c` for `step`; on
    /// success records the newly bound source elements in `bound`.
    fn try_bind(&mut self, step: Step, c: u32, bound: &mut SmallVec<[Elem; 4]>) -> bool {
        match step {
            Step::Free(e) => {
                if self.injective && self.used[c as usize] {
                    return false;
                }
                self.assign[e as usize] = Some(c);
                if self.injective {
                    self.used[c as usize] = true;
                }
                bound.push(e);
                true
            }
            Step::Atom(i) => {
                let (_, sargs) = self.source.atom(i);
                let (_, targs) = self.target.atom(c);
                for (k, (&s, &t)) in sargs.iter().zip(targs.iter()).enumerate() {
                    match self.assign[s as usize] {
                        Some(x) if x == t => {}
                        Some(_) => {
                            self.undo(bound);
                            return false;
                        }
                        None => {
                            if self.injective && self.used[t as usize] {
                                self.undo(bound);
                                return false;
                            }
                            let _ = k;
                            self.assign[s as usize] = Some(t);
                            if self.injective {
                                self.used[t as usize] = true;
                            }
                            bound.push(s);
                        }
                    }
                }
                true
            }
        }
    }

    fn undo(&mut self, bound: &mut SmallVec<[Elem; 4]>) {
        for &e in bound.iter() {
            if self.injective {
                if let Some(t) = self.assign[e as usize] {
                    self.used[t as usize] = false;
                }
            }
            self.assign[e as usize] = None;
        }
        bound.clear();
    }

    fn current(&self) -> Homomorphism {
        Homomorphism {
            mapping: self
                .assign
                .iter()
                .map(|a| a.expect("complete assignment"))
                .collect(),
        }
    }
}

impl Iterator for HomSearch<'_> {
    type Item = Homomorphism;

    fn next(&mut self) -> Option<Homomorphism> {
        if self.dead {
            return None;
        }
        if !self.started {
            self.started = true;
            if self.plan.is_empty() {
                self.dead = true;
                return Some(self.current());
            }
            let c = self.candidates(self.plan[0]);
            self.frames.push(Frame {
                cands: c,
                next: 0,
                bound: SmallVec::new(),
            });
        } else {
            // Resume after a reported solution: release the deepest binding.
            if let Some(mut f) = self.frames.pop() {
                let mut b = std::mem::take(&mut f.bound);
                self.undo(&mut b);
                self.frames.push(f);
            }
        }
        loop {
            let depth = self.frames.len();
            if depth == 0 {
                self.dead = true;
                return None;
            }
            let step = self.plan[depth - 1];
            let top = self.frames.last_mut().expect("non-empty");
            if top.next >= top.cands.len() {
                self.frames.pop();
                if let Some(mut f) = self.frames.pop() {
                    let mut b = std::mem::take(&mut f.bound);
                    self.undo(&mut b);
                    self.frames.push(f);
                }
                continue;
            }
            let c = top.cands.get(top.next);
            top.next += 1;
            let mut bound = SmallVec::new();
            if !self.try_bind(step, c, &mut bound) {
                continue;
            }
            self.frames.last_mut().expect("non-empty").bound = bound;
            if depth == self.plan.len() {
                return Some(self.current());
            }
            let cands = self.candidates(self.plan[depth]);
            self.frames.push(Frame {
                cands,
                next: 0,
                bound: SmallVec::new(),
            });
        }
    }
}

/// Enumerates the homomorphisms `source → target` extending `seed`.
pub fn find_homomorphisms<'a>(
    source: &'a Structure,
    target: &'a Structure,
    seed: &[(Elem, Elem)],
) -> HomSearch<'a> {
    HomSearch::new(source, target, seed, false)
}

pub fn exists_homomorphism(source: &Structure, target: &Structure, seed: &[(Elem, Elem)]) -> bool {
    find_homomorphisms(source, target, seed).next().is_some()
}

/// An isomorphism `a → b` fixing constants, if one exists.
pub fn find_isomorphism(a: &Structure, b: &Structure) -> Option<Homomorphism> {
    if a.num_elements() != b.num_elements() || a.num_atoms() != b.num_atoms() {
        return None;
    }
    let sig_a = a.signature();
    let sig_b = b.signature();
    if sig_a.constants != sig_b.constants {
        return None;
    }
    for p in a.predicates() {
        if a.atoms_of(p).len() != b.count_pred(a.pred_name(p)) {
            return None;
        }
    }
    // Injective and atom-count preserving, hence bijective on atoms.
    HomSearch::new(a, b, &[], true).next()
}

// ---------------------------------------------------------------------------
// Conjunctive queries

/// A canonical structure with an ordered tuple of free variables.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjunctiveQuery {
    pub canonical: Structure,
    pub free: Vec<Elem>,
}

impl ConjunctiveQuery {
    pub fn new(canonical: Structure, free_names: &[&str]) -> Result<Self, RelError> {
        let mut free = Vec::with_capacity(free_names.len());
        for n in free_names {
            let e = canonical
                .lookup(n)
                .ok_or_else(|| RelError::UnknownElement(n.to_string()))?;
            if canonical.is_constant(e) {
                return Err(RelError::Malformed(format!(
                    "constant `{n}` cannot be a free variable"
                )));
            }
            free.push(e);
        }
        Ok(ConjunctiveQuery { canonical, free })
    }

    /// Boolean version: all variables quantified.
    pub fn boolean(&self) -> ConjunctiveQuery {
        ConjunctiveQuery {
            canonical: self.canonical.clone(),
            free: Vec::new(),
        }
    }

    pub fn free_names(&self) -> Vec<&str> {
        self.free.iter().map(|&e| self.canonical.name(e)).collect()
    }
}

/// The view `{ā : d ⊨ q(ā)}`, as tuples of target element ids.
pub fn eval_cq(q: &ConjunctiveQuery, d: &Structure) -> Result<BTreeSet<Vec<Elem>>, RelError> {
    q.canonical.signature().compatible_with(&d.signature())?;
    let mut out = BTreeSet::new();
    for h in find_homomorphisms(&q.canonical, d, &[]) {
        out.insert(q.free.iter().map(|&v| h.apply(v)).collect());
    }
    Ok(out)
}

/// Same as [`eval_cq`] with tuples spelled by element names.
pub fn eval_cq_named(
    q: &ConjunctiveQuery,
    d: &Structure,
) -> Result<BTreeSet<Vec<String>>, RelError> {
    Ok(eval_cq(q, d)?
        .into_iter()
        .map(|t| t.into_iter().map(|e| d.name(e).to_string()).collect())
        .collect())
}

/// Whether `d ⊨ q(tuple)`.
pub fn satisfies_at(q: &ConjunctiveQuery, d: &Structure, tuple: &[Elem]) -> bool {
    let seed: Vec<(Elem, Elem)> = q.free.iter().copied().zip(tuple.iter().copied()).collect();
    exists_homomorphism(&q.canonical, d, &seed)
}

// ---------------------------------------------------------------------------
// Colors

/// Whether any predicate of the structure carries a color prefix.
pub fn is_colored(s: &Structure) -> Option<String> {
    s.predicates()
        .map(|p| s.pred_name(p))
        .find(|n| split_color(n).0.is_some())
        .map(|n| n.to_string())
}

/// Replaces every predicate by its colored copy.
pub fn paint(s: &Structure, color: Color) -> Result<Structure, RelError> {
    if let Some(p) = is_colored(s) {
        return Err(RelError::AlreadyColored(p));
    }
    Ok(recolor(s, |name| colored(color, name)))
}

pub fn paint_cq(q: &ConjunctiveQuery, color: Color) -> Result<ConjunctiveQuery, RelError> {
    Ok(ConjunctiveQuery {
        canonical: paint(&q.canonical, color)?,
        free: q.free.clone(),
    })
}

/// Erases colors; atoms equal after erasure merge.
pub fn dalt(s: &Structure) -> Structure {
    recolor(s, |name| split_color(name).1.to_string())
}

pub fn dalt_cq(q: &ConjunctiveQuery) -> ConjunctiveQuery {
    ConjunctiveQuery {
        canonical: dalt(&q.canonical),
        free: q.free.clone(),
    }
}

/// Element ids are preserved, so free-variable lists stay valid.
fn recolor(s: &Structure, f: impl Fn(&str) -> String) -> Structure {
    let mut out = Structure::new();
    for e in s.elements() {
        if s.is_constant(e) {
            out.add_constant(s.name(e));
        } else {
            out.add_element(s.name(e));
        }
    }
    let pmap: Vec<PredId> = s
        .predicates()
        .map(|p| {
            out.declare_predicate(&f(s.pred_name(p)), s.pred_arity(p))
                .expect("recoloring preserves arity")
        })
        .collect();
    for (p, args) in s.atoms() {
        out.add_atom_ids(pmap[p as usize], args);
    }
    out
}

/// The atoms of one color, with elements shrunk to those still in use plus
/// constants.
pub fn restrict(s: &Structure, color: Color) -> Structure {
    s.filter_atoms(|p, _| split_color(p).0 == Some(color))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(atoms: &[(&str, &[&str])]) -> Structure {
        let mut s = Structure::new();
        for (p, args) in atoms {
            s.add_atom(p, args).unwrap();
        }
        s
    }

    #[test]
    fn single_atom_two_targets() {
        let src = st(&[("P", &["x"])]);
        let tgt = st(&[("P", &["a"]), ("P", &["b"])]);
        let homs: Vec<_> = find_homomorphisms(&src, &tgt, &[]).collect();
        assert_eq!(homs.len(), 2);
        let images: BTreeSet<&str> = homs.iter().map(|h| tgt.name(h.apply(0))).collect();
        assert_eq!(images, ["a", "b"].into_iter().collect());
    }

    #[test]
    fn identity_is_found() {
        let s = st(&[("E", &["x", "y"]), ("E", &["y", "z"]), ("E", &["z", "x"])]);
        let seed: Vec<(Elem, Elem)> = s.elements().map(|e| (e, e)).collect();
        let h = find_homomorphisms(&s, &s, &seed).next().unwrap();
        assert_eq!(h.mapping, vec![0, 1, 2]);
    }

    #[test]
    fn constants_map_to_themselves() {
        let mut src = Structure::new();
        src.add_constant("a");
        src.add_atom("E", &["a", "x"]).unwrap();
        let mut tgt = Structure::new();
        tgt.add_constant("a");
        tgt.add_atom("E", &["b", "c"]).unwrap();
        tgt.add_atom("E", &["a", "d"]).unwrap();
        let homs: Vec<_> = find_homomorphisms(&src, &tgt, &[]).collect();
        assert_eq!(homs.len(), 1);
        assert_eq!(tgt.name(homs[0].apply(src.lookup("x").unwrap())), "d");
    }

    #[test]
    fn boolean_and_unary_views() {
        let q = ConjunctiveQuery::new(st(&[("P", &["x"])]), &[]).unwrap();
        let d = st(&[("P", &["a"])]);
        assert_eq!(eval_cq(&q, &d).unwrap().len(), 1);
        let q = ConjunctiveQuery::new(st(&[("P", &["x"])]), &["x"]).unwrap();
        let d = st(&[("P", &["a"]), ("P", &["b"])]);
        let v = eval_cq_named(&q, &d).unwrap();
        assert_eq!(
            v,
            [vec!["a".to_string()], vec!["b".to_string()]]
                .into_iter()
                .collect()
        );
    }

    #[test]
    fn paint_dalt_restrict() {
        let d = st(&[("P", &["a", "b"])]);
        let g = paint(&d, Color::Green).unwrap();
        assert!(g.has_atom("G:P", &["a", "b"]));
        assert_eq!(dalt(&g), d);
        assert!(paint(&g, Color::Red).is_err());
        assert_eq!(restrict(&g, Color::Red).num_atoms(), 0);

        let mixed = st(&[("G:P", &["a"]), ("R:P", &["a"])]);
        assert_eq!(dalt(&mixed).num_atoms(), 1);
        let mixed = st(&[("G:P", &["a"]), ("R:Q", &["b"])]);
        let r = restrict(&mixed, Color::Green);
        assert_eq!(r.num_atoms(), 1);
        assert_eq!(r.num_elements(), 1);
    }

    #[test]
    fn isomorphism_fixes_constants() {
        let mut a = Structure::new();
        a.add_constant("c");
        a.add_atom("E", &["c", "x"]).unwrap();
        a.add_atom("E", &["x", "y"]).unwrap();
        let mut b = Structure::new();
        b.add_constant("c");
        b.add_atom("E", &["u", "v"]).unwrap();
        b.add_atom("E", &["c", "u"]).unwrap();
        assert!(find_isomorphism(&a, &b).is_some());
        let mut c = Structure::new();
        c.add_constant("c");
        c.add_atom("E", &["u", "c"]).unwrap();
        c.add_atom("E", &["c", "v"]).unwrap();
        assert!(find_isomorphism(&a, &c).is_none());
    }

    #[test]
    fn json_round_trip() {
        let mut s = Structure::new();
        s.add_constant("a");
        s.add_atom("G:E", &["a", "x"]).unwrap();
        let j = s.to_json();
        let back = Structure::from_json(&j).unwrap();
        assert_eq!(back, s);
        let text = serde_json::to_string(&j).unwrap();
        assert!(text.contains("\"G:E\""));
    }
}
