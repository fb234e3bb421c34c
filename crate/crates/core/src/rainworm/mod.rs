//! Rainworm machines: a Thue-style rewriting machine whose head sits
//! between cells.  Configurations are words over tape symbols and states;
//! the prefix `α(β1β0)*[β1]` is the slime trail, the rest is the worm.
//!
//! Symbols are represented by their label codes, so a configuration is
//! directly a word of a green graph path.

pub mod model;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codes::{SkeletonCodes, SymbolTable};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RainwormError {
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("symbol `{0}` is declared more than once")]
    Duplicate(String),
    #[error("invalid machine: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("two instructions apply to {0}")]
    Nondeterministic(String),
    #[error("the machine did not halt within {0} steps")]
    NotHalted(usize),
    #[error("the construction exceeded {0} edges")]
    EdgeBudget(usize),
    #[error("theorem-level discrepancy: {0}")]
    Discrepancy(String),
}

/// The partition class of a symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Class {
    Alpha,
    Beta0,
    Beta1,
    Gamma0,
    Gamma1,
    Omega0,
    Eta11,
    Eta0,
    Eta1,
    A0,
    A1,
    /// `𝔔→₀`
    Right0,
    /// `𝔔←₀`
    Left0,
    /// `𝔔→₁`
    Right1,
    /// `𝔔←₁`
    Left1,
    /// `𝔔→_{γ0}`
    RightGamma0,
    /// `𝔔→_{γ1}`
    RightGamma1,
}

impl Class {
    pub fn is_state(self) -> bool {
        use Class::*;
        matches!(self, Eta11 | Eta0 | Eta1 | Right0 | Left0 | Right1 | Left1 | RightGamma0 | RightGamma1)
    }

    /// `ω0` is not listed in either parity class; the instruction shapes
    /// force it to be even.
    pub fn is_even(self) -> bool {
        use Class::*;
        matches!(self, Alpha | Beta0 | Gamma0 | Eta0 | Omega0 | A0 | Right0 | Left0 | RightGamma0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Shape {
    #[serde(rename = "d1")]
    D1,
    #[serde(rename = "d2")]
    D2,
    #[serde(rename = "d3")]
    D3,
    #[serde(rename = "d4")]
    D4,
    #[serde(rename = "d4'", alias = "d4p")]
    D4p,
    #[serde(rename = "d5")]
    D5,
    #[serde(rename = "d5'", alias = "d5p")]
    D5p,
    #[serde(rename = "d6")]
    D6,
    #[serde(rename = "d6'", alias = "d6p")]
    D6p,
    #[serde(rename = "d7")]
    D7,
    #[serde(rename = "d7'", alias = "d7p")]
    D7p,
    #[serde(rename = "d8")]
    D8,
}

impl Shape {
    pub const ALL: [Shape; 12] = [
        Shape::D1,
        Shape::D2,
        Shape::D3,
        Shape::D4,
        Shape::D4p,
        Shape::D5,
        Shape::D5p,
        Shape::D6,
        Shape::D6p,
        Shape::D7,
        Shape::D7p,
        Shape::D8,
    ];

    /// Classes of the left and right sides.
    pub fn signature(self) -> (&'static [Class], &'static [Class]) {
        use Class::*;
        match self {
            Shape::D1 => (&[Eta11], &[Gamma1, Eta0]),
            Shape::D2 => (&[Eta0], &[A0, Eta1]),
            Shape::D3 => (&[Eta1], &[Left1, Omega0]),
            Shape::D4 => (&[A1, Left0], &[Left1, A0]),
            Shape::D4p => (&[A0, Left1], &[Left0, A1]),
            Shape::D5 => (&[Gamma1, Left0], &[Beta1, RightGamma0]),
            Shape::D5p => (&[Gamma0, Left1], &[Beta0, RightGamma1]),
            Shape::D6 => (&[RightGamma1, A0], &[Gamma1, Right0]),
            Shape::D6p => (&[RightGamma0, A1], &[Gamma0, Right1]),
            Shape::D7 => (&[Right1, A0], &[A1, Right0]),
            Shape::D7p => (&[Right0, A1], &[A0, Right1]),
            Shape::D8 => (&[Right1, Omega0], &[A1, Eta0]),
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("shape serializes");
        write!(f, "◇{}", s.as_str().unwrap_or("?").trim_start_matches('d'))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionJson {
    pub shape: Shape,
    pub lhs: Vec<String>,
    pub rhs: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatesJson {
    #[serde(default)]
    pub right0: Vec<String>,
    #[serde(default)]
    pub left0: Vec<String>,
    #[serde(default)]
    pub right1: Vec<String>,
    #[serde(default)]
    pub left1: Vec<String>,
    #[serde(default)]
    pub right_gamma0: Vec<String>,
    #[serde(default)]
    pub right_gamma1: Vec<String>,
}

/// Machine file format: the free parts of the partitions plus instructions.
/// The fixed symbols `α β0 β1 γ0 γ1 ω0 η11 η0 η1` are implicit.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineJson {
    #[serde(default)]
    pub a0: Vec<String>,
    #[serde(default)]
    pub a1: Vec<String>,
    #[serde(default)]
    pub states: StatesJson,
    pub instructions: Vec<InstructionJson>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Instruction {
    pub shape: Shape,
    pub lhs: Vec<u32>,
    pub rhs: Vec<u32>,
}

pub type Config = Vec<u32>;

#[derive(Debug, Clone)]
pub struct Machine {
    pub sk: SkeletonCodes,
    pub classes: BTreeMap<u32, Class>,
    pub table: SymbolTable,
    pub instructions: Vec<Instruction>,
}

/// Greek and ASCII spellings of the fixed symbols.
fn fixed_symbol(name: &str, sk: &SkeletonCodes) -> Option<(u32, Class)> {
    Some(match name {
        "α" | "alpha" => (sk.alpha, Class::Alpha),
        "β0" | "beta0" => (sk.beta0, Class::Beta0),
        "β1" | "beta1" => (sk.beta1, Class::Beta1),
        "γ0" | "gamma0" => (sk.gamma0, Class::Gamma0),
        "γ1" | "gamma1" => (sk.gamma1, Class::Gamma1),
        "ω0" | "omega0" => (sk.omega0, Class::Omega0),
        "η11" | "eta11" => (sk.eta11, Class::Eta11),
        "η0" | "eta0" => (sk.eta0, Class::Eta0),
        "η1" | "eta1" => (sk.eta1, Class::Eta1),
        _ => return None,
    })
}

impl Machine {
    /// Resolves names and assigns codes: machine symbols get fresh codes
    /// above every code of the separating example, with the parity of
    /// their class.  Shape errors are left to [`Machine::validate`].
    pub fn from_json(j: &MachineJson, sk: &SkeletonCodes) -> Result<Machine, RainwormError> {
        let mut table = SymbolTable::separating_example(sk);
        let mut classes = BTreeMap::new();
        let mut by_name: BTreeMap<String, u32> = BTreeMap::new();
        for (name, code) in sk.named() {
            let (_, class) = fixed_symbol(name, sk).expect("fixed names resolve");
            classes.insert(code, class);
            by_name.insert(name.to_string(), code);
        }
        let groups: [(&[String], Class); 8] = [
            (&j.a0, Class::A0),
            (&j.a1, Class::A1),
            (&j.states.right0, Class::Right0),
            (&j.states.left0, Class::Left0),
            (&j.states.right1, Class::Right1),
            (&j.states.left1, Class::Left1),
            (&j.states.right_gamma0, Class::RightGamma0),
            (&j.states.right_gamma1, Class::RightGamma1),
        ];
        let mut floor = table.names.keys().copied().max().unwrap_or(0);
        for (names, class) in groups {
            for n in names {
                if by_name.contains_key(n) || fixed_symbol(n, sk).is_some() {
                    return Err(RainwormError::Duplicate(n.clone()));
                }
                let code = table.next_free(floor, class.is_even());
                floor = floor.max(code);
                table.insert(code, n);
                classes.insert(code, class);
                by_name.insert(n.clone(), code);
            }
        }
        let resolve = |n: &String| -> Result<u32, RainwormError> {
            by_name
                .get(n)
                .copied()
                .or_else(|| fixed_symbol(n, sk).map(|(c, _)| c))
                .ok_or_else(|| RainwormError::UnknownSymbol(n.clone()))
        };
        let instructions = j
            .instructions
            .iter()
            .map(|ins| {
                Ok(Instruction {
                    shape: ins.shape,
                    lhs: ins.lhs.iter().map(resolve).collect::<Result<_, _>>()?,
                    rhs: ins.rhs.iter().map(resolve).collect::<Result<_, _>>()?,
                })
            })
            .collect::<Result<Vec<_>, RainwormError>>()?;
        Ok(Machine {
            sk: *sk,
            classes,
            table,
            instructions,
        })
    }

    pub fn to_json(&self) -> MachineJson {
        let names = |c: Class| -> Vec<String> {
            self.classes
                .iter()
                .filter(|(_, &k)| k == c)
                .map(|(&code, _)| self.table.name(code))
                .collect()
        };
        MachineJson {
            a0: names(Class::A0),
            a1: names(Class::A1),
            states: StatesJson {
                right0: names(Class::Right0),
                left0: names(Class::Left0),
                right1: names(Class::Right1),
                left1: names(Class::Left1),
                right_gamma0: names(Class::RightGamma0),
                right_gamma1: names(Class::RightGamma1),
            },
            instructions: self
                .instructions
                .iter()
                .map(|i| InstructionJson {
                    shape: i.shape,
                    lhs: i.lhs.iter().map(|&c| self.table.name(c)).collect(),
                    rhs: i.rhs.iter().map(|&c| self.table.name(c)).collect(),
                })
                .collect(),
        }
    }

    pub fn class(&self, code: u32) -> Option<Class> {
        self.classes.get(&code).copied()
    }

    pub fn is_state(&self, code: u32) -> bool {
        self.class(code).is_some_and(Class::is_state)
    }

    pub fn word(&self, w: &[u32]) -> String {
        self.table.word(w)
    }

    /// Shape conformance and partial functionality; empty when valid.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut lhs_seen: BTreeMap<&[u32], usize> = BTreeMap::new();
        for (k, ins) in self.instructions.iter().enumerate() {
            let (l, r) = ins.shape.signature();
            let fits = |w: &[u32], sig: &[Class]| {
                w.len() == sig.len() && w.iter().zip(sig).all(|(&c, &k)| self.class(c) == Some(k))
            };
            if !fits(&ins.lhs, l) || !fits(&ins.rhs, r) {
                out.push(format!(
                    "instruction {k} ({} ⇝ {}) does not have shape {}",
                    self.word(&ins.lhs),
                    self.word(&ins.rhs),
                    ins.shape
                ));
            }
            if let Some(prev) = lhs_seen.insert(&ins.lhs, k) {
                out.push(format!(
                    "instructions {prev} and {k} share the left side {}",
                    self.word(&ins.lhs)
                ));
            }
        }
        out
    }

    pub fn initial(&self) -> Config {
        vec![self.sk.alpha, self.sk.eta11]
    }

    /// All `(instruction, position)` redexes in `w`.
    pub fn redexes(&self, w: &[u32]) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (k, ins) in self.instructions.iter().enumerate() {
            let n = ins.lhs.len();
            if n == 0 || n > w.len() {
                continue;
            }
            for p in 0..=w.len() - n {
                if w[p..p + n] == ins.lhs[..] {
                    out.push((k, p));
                }
            }
        }
        out
    }

    /// The successor of `w`, if any.  Two redexes would contradict
    /// determinism and are reported as an error.
    pub fn step(&self, w: &[u32]) -> Result<Option<Config>, RainwormError> {
        let r = self.redexes(w);
        match r.as_slice() {
            [] => Ok(None),
            [(k, p)] => {
                let ins = &self.instructions[*k];
                let mut v = Vec::with_capacity(w.len() + 1);
                v.extend_from_slice(&w[..*p]);
                v.extend_from_slice(&ins.rhs);
                v.extend_from_slice(&w[p + ins.lhs.len()..]);
                Ok(Some(v))
            }
            _ => Err(RainwormError::Nondeterministic(self.word(w))),
        }
    }

    /// All `w` with `w ⇝ v`.
    pub fn predecessors(&self, v: &[u32]) -> Vec<Config> {
        let mut out = BTreeSet::new();
        for ins in &self.instructions {
            let n = ins.rhs.len();
            if n > v.len() {
                continue;
            }
            for p in 0..=v.len() - n {
                if v[p..p + n] == ins.rhs[..] {
                    let mut w = v[..p].to_vec();
                    w.extend_from_slice(&ins.lhs);
                    w.extend_from_slice(&v[p + n..]);
                    out.insert(w);
                }
            }
        }
        out.into_iter().collect()
    }

    /// A concrete predecessor bound: instructions times positions.
    pub fn predecessor_bound(&self, v: &[u32]) -> usize {
        self.instructions.len() * (v.len() + 1)
    }

    /// Runs from `αη11` for at most `budget` steps.
    pub fn run(&self, budget: usize) -> Result<RunResult, RainwormError> {
        let mut trace = vec![self.initial()];
        loop {
            let cur = trace.last().expect("non-empty trace");
            match self.step(cur)? {
                None => {
                    return Ok(RunResult {
                        steps: trace.len() - 1,
                        halted: true,
                        trace,
                    })
                }
                Some(next) => {
                    if trace.len() > budget {
                        return Ok(RunResult {
                            steps: trace.len() - 1,
                            halted: false,
                            trace,
                        });
                    }
                    trace.push(next);
                }
            }
        }
    }

    /// Steps from `w` until `target` or `limit` steps; the step count when
    /// `target` is reached.
    pub fn steps_to(&self, w: &[u32], target: &[u32], limit: usize) -> Result<Option<usize>, RainwormError> {
        let mut cur = w.to_vec();
        for k in 0..=limit {
            if cur == target {
                return Ok(Some(k));
            }
            match self.step(&cur)? {
                Some(n) => cur = n,
                None => return Ok(None),
            }
        }
        Ok(None)
    }

    /// Backward closure of `v` under `⇝`, capped at `cap` words; the flag
    /// says whether the closure was exhausted.
    pub fn predecessor_closure(&self, v: &[u32], cap: usize) -> (BTreeSet<Config>, bool) {
        let mut seen: BTreeSet<Config> = BTreeSet::new();
        seen.insert(v.to_vec());
        let mut queue: VecDeque<Config> = VecDeque::from([v.to_vec()]);
        while let Some(w) = queue.pop_front() {
            for p in self.predecessors(&w) {
                if seen.contains(&p) {
                    continue;
                }
                if seen.len() >= cap {
                    return (seen, false);
                }
                seen.insert(p.clone());
                queue.push_back(p);
            }
        }
        (seen, true)
    }

    /// The four conditions of an RM configuration.
    pub fn check_config(&self, w: &[u32]) -> ConfigCheck {
        let sk = &self.sk;
        let states: Vec<usize> = (0..w.len()).filter(|&i| self.is_state(w[i])).collect();
        let known = w.iter().all(|c| self.classes.contains_key(c));
        let one_head = known && states.len() == 1 && states[0] >= 1;
        let last_ok = w
            .last()
            .is_some_and(|&c| [sk.eta11, sk.eta0, sk.eta1, sk.omega0].contains(&c));
        let alternating = known
            && w.windows(2).all(|p| {
                self.class(p[0]).map(Class::is_even) != self.class(p[1]).map(Class::is_even)
            });
        ConfigCheck {
            one_head,
            last_symbol: last_ok,
            alternating,
            trail_then_worm: known && self.trail_split(w).is_some(),
        }
    }

    /// `w = w1 w2` with `w1` the slime trail.  Besides the listed openings
    /// of `w2`, the lone `η11` of the initial configuration is accepted:
    /// `αη11` is reachable, so it must count as a configuration.
    pub fn trail_split(&self, w: &[u32]) -> Option<usize> {
        let sk = &self.sk;
        let is_ab = |c: u32| c == sk.alpha || c == sk.beta0 || c == sk.beta1;
        if w.first() != Some(&sk.alpha) {
            return None;
        }
        let k = w.iter().take_while(|&&c| is_ab(c)).count();
        let trail_ok = w[1..k]
            .iter()
            .enumerate()
            .all(|(i, &c)| c == if i % 2 == 0 { sk.beta1 } else { sk.beta0 });
        if !trail_ok || w[k..].iter().any(|&c| is_ab(c)) {
            return None;
        }
        let opens = w.get(k).is_some_and(|&c| {
            c == sk.gamma0
                || c == sk.gamma1
                || matches!(self.class(c), Some(Class::RightGamma0 | Class::RightGamma1))
                || (c == sk.eta11 && k + 1 == w.len())
        });
        opens.then_some(k)
    }

    pub fn slime_trail<'w>(&self, w: &'w [u32]) -> Option<&'w [u32]> {
        self.trail_split(w).map(|k| &w[..k])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConfigCheck {
    pub one_head: bool,
    pub last_symbol: bool,
    pub alternating: bool,
    pub trail_then_worm: bool,
}

impl ConfigCheck {
    pub fn all(&self) -> bool {
        self.first_three() && self.trail_then_worm
    }

    pub fn first_three(&self) -> bool {
        self.one_head && self.last_symbol && self.alternating
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunResult {
    pub trace: Vec<Config>,
    pub halted: bool,
    pub steps: usize,
}

impl RunResult {
    /// `u_△` when halted.
    pub fn final_config(&self) -> Option<&Config> {
        self.halted.then(|| self.trace.last()).flatten()
    }
}

fn instr(shape: Shape, lhs: &[&str], rhs: &[&str]) -> InstructionJson {
    InstructionJson {
        shape,
        lhs: lhs.iter().map(|s| s.to_string()).collect(),
        rhs: rhs.iter().map(|s| s.to_string()).collect(),
    }
}

/// `Δ = {η11 ⇝ γ1η0}`: halts after one step in `αγ1η0`.
pub fn delta_halt() -> MachineJson {
    MachineJson {
        instructions: vec![instr(Shape::D1, &["η11"], &["γ1", "η0"])],
        ..Default::default()
    }
}

/// One symbol per tape class, one state per role and one instruction per
/// shape: the worm creeps forever, its trail growing by one β per cycle.
pub fn delta_loop() -> MachineJson {
    let v = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    MachineJson {
        a0: v(&["b0"]),
        a1: v(&["b1"]),
        states: StatesJson {
            right0: v(&["r0"]),
            left0: v(&["l0"]),
            right1: v(&["r1"]),
            left1: v(&["l1"]),
            right_gamma0: v(&["g0"]),
            right_gamma1: v(&["g1"]),
        },
        instructions: vec![
            instr(Shape::D1, &["η11"], &["γ1", "η0"]),
            instr(Shape::D2, &["η0"], &["b0", "η1"]),
            instr(Shape::D3, &["η1"], &["l1", "ω0"]),
            instr(Shape::D4, &["b1", "l0"], &["l1", "b0"]),
            instr(Shape::D4p, &["b0", "l1"], &["l0", "b1"]),
            instr(Shape::D5, &["γ1", "l0"], &["β1", "g0"]),
            instr(Shape::D5p, &["γ0", "l1"], &["β0", "g1"]),
            instr(Shape::D6, &["g1", "b0"], &["γ1", "r0"]),
            instr(Shape::D6p, &["g0", "b1"], &["γ0", "r1"]),
            instr(Shape::D7, &["r1", "b0"], &["b1", "r0"]),
            instr(Shape::D7p, &["r0", "b1"], &["b0", "r1"]),
            instr(Shape::D8, &["r1", "ω0"], &["b1", "η0"]),
        ],
    }
}

/// [`delta_loop`] without `◇7'`: the worm stalls on its second trip to
/// the right, halting after 13 steps with a slime trail `αβ1β0`.
pub fn delta_halt_long() -> MachineJson {
    let mut j = delta_loop();
    j.instructions.retain(|i| i.shape != Shape::D7p);
    j
}

#[cfg(test)]
mod tests {
    use super::*;

    fn machine(j: &MachineJson) -> Machine {
        Machine::from_json(j, &SkeletonCodes::default()).unwrap()
    }

    #[test]
    fn fixtures_are_valid() {
        assert!(machine(&delta_halt()).validate().is_empty());
        assert!(machine(&delta_loop()).validate().is_empty());
    }

    #[test]
    fn duplicate_left_side_is_reported() {
        let mut j = delta_loop();
        j.a0.push("c0".into());
        j.instructions.push(instr(Shape::D2, &["η0"], &["c0", "η1"]));
        let v = machine(&j).validate();
        assert_eq!(v.len(), 1);
        assert!(v[0].contains("share the left side"));
    }

    #[test]
    fn wrong_slot_is_a_shape_violation() {
        let mut j = delta_loop();
        // ◇4 wants b' ∈ 𝔄₁ first; b0 is in 𝔄₀.
        j.instructions[3] = instr(Shape::D4, &["b0", "l0"], &["l1", "b0"]);
        assert!(machine(&j).validate().iter().any(|v| v.contains("shape")));
    }

    #[test]
    fn halting_fixture() {
        let m = machine(&delta_halt());
        let sk = m.sk;
        let r = m.run(10).unwrap();
        assert!(r.halted);
        assert_eq!(r.steps, 1);
        assert_eq!(r.final_config().unwrap(), &vec![sk.alpha, sk.gamma1, sk.eta0]);
        assert_eq!(m.predecessors(&[sk.alpha, sk.gamma1, sk.eta0]), vec![m.initial()]);
        assert!(m.predecessors(&m.initial()).is_empty());
    }

    #[test]
    fn machine_codes_respect_parity() {
        let m = machine(&delta_loop());
        for (&code, class) in &m.classes {
            assert_eq!(code % 2 == 0, class.is_even(), "{}", m.table.name(code));
        }
    }

    #[test]
    fn json_round_trip() {
        let m = machine(&delta_loop());
        let back = machine(&m.to_json());
        assert_eq!(back.instructions, m.instructions);
    }
}
