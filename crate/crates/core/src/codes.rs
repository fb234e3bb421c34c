//! Label codes: the skeleton symbols of the infinite path, the 32 grid
//! labels, and a symbol table mapping codes back to readable names.
//!
//! Codes 1 and 2 are the two grid labels whose meeting is the 1-2 pattern;
//! 3 and 4 are reserved for the base Precompile rules.  Skeleton codes sit
//! in 5..=14 with the parities the path rules need; the other 30 grid labels
//! take even codes 16, 18, ..., 74.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkeletonCodes {
    pub alpha: u32,
    pub beta0: u32,
    pub beta1: u32,
    pub eta0: u32,
    pub eta1: u32,
    pub gamma0: u32,
    pub gamma1: u32,
    pub eta11: u32,
    pub omega0: u32,
}

impl Default for SkeletonCodes {
    fn default() -> Self {
        SkeletonCodes {
            alpha: 6,
            beta0: 8,
            beta1: 5,
            eta0: 10,
            eta1: 7,
            gamma0: 12,
            gamma1: 9,
            eta11: 11,
            omega0: 14,
        }
    }
}

impl SkeletonCodes {
    pub fn named(&self) -> [(&'static str, u32); 9] {
        [
            ("α", self.alpha),
            ("β0", self.beta0),
            ("β1", self.beta1),
            ("η0", self.eta0),
            ("η1", self.eta1),
            ("γ0", self.gamma0),
            ("γ1", self.gamma1),
            ("η11", self.eta11),
            ("ω0", self.omega0),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dir {
    N,
    E,
    S,
    W,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Kind {
    Alpha,
    Beta,
}

/// `⟨dir, kind, diagonal, border⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridLabel {
    pub dir: Dir,
    pub kind: Kind,
    pub diag: bool,
    pub border: bool,
}

impl GridLabel {
    pub fn new(dir: Dir, kind: Kind, diag: bool, border: bool) -> Self {
        GridLabel { dir, kind, diag, border }
    }

    pub fn all() -> Vec<GridLabel> {
        let mut out = Vec::with_capacity(32);
        for dir in [Dir::N, Dir::E, Dir::S, Dir::W] {
            for kind in [Kind::Alpha, Kind::Beta] {
                for diag in [true, false] {
                    for border in [true, false] {
                        out.push(GridLabel { dir, kind, diag, border });
                    }
                }
            }
        }
        out
    }

    /// The fixed code assignment.
    pub fn code(&self) -> u32 {
        if self.kind == Kind::Alpha && !self.diag && !self.border {
            match self.dir {
                Dir::N => return 1,
                Dir::W => return 2,
                _ => {}
            }
        }
        let rank = GridLabel::all()
            .into_iter()
            .filter(|l| l.code_is_free())
            .position(|l| l == *self)
            .expect("every label is listed");
        16 + 2 * rank as u32
    }

    fn code_is_free(&self) -> bool {
        !(self.kind == Kind::Alpha && !self.diag && !self.border && matches!(self.dir, Dir::N | Dir::W))
    }

    pub fn from_code(code: u32) -> Option<GridLabel> {
        GridLabel::all().into_iter().find(|l| l.code() == code)
    }
}

impl fmt::Display for GridLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dir = match self.dir {
            Dir::N => "n",
            Dir::E => "e",
            Dir::S => "s",
            Dir::W => "w",
        };
        let kind = match self.kind {
            Kind::Alpha => "α",
            Kind::Beta => "β",
        };
        let diag = if self.diag { "d" } else { "d̄" };
        let border = if self.border { "b" } else { "b̄" };
        write!(f, "⟨{dir},{kind},{diag},{border}⟩")
    }
}

/// Largest code in use by the separating example.
pub const GRID_MAX_CODE: u32 = 74;

/// Readable names for codes; serialized with reports.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolTable {
    pub names: BTreeMap<u32, String>,
}

impl SymbolTable {
    pub fn separating_example(sk: &SkeletonCodes) -> Self {
        let mut names = BTreeMap::new();
        for (n, c) in sk.named() {
            names.insert(c, n.to_string());
        }
        for l in GridLabel::all() {
            names.insert(l.code(), l.to_string());
        }
        SymbolTable { names }
    }

    pub fn insert(&mut self, code: u32, name: &str) {
        self.names.insert(code, name.to_string());
    }

    pub fn name(&self, code: u32) -> String {
        self.names.get(&code).cloned().unwrap_or_else(|| code.to_string())
    }

    pub fn word(&self, w: &[u32]) -> String {
        w.iter().map(|&c| self.name(c)).collect::<Vec<_>>().join(" ")
    }

    /// Smallest unused code above `floor` with the requested parity.
    pub fn next_free(&self, floor: u32, even: bool) -> u32 {
        let mut c = floor + 1;
        loop {
            if (c % 2 == 0) == even && !self.names.contains_key(&c) && c > 4 {
                return c;
            }
            c += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn grid_codes_are_distinct_and_reserved_pair_fixed() {
        let codes: BTreeSet<u32> = GridLabel::all().iter().map(|l| l.code()).collect();
        assert_eq!(codes.len(), 32);
        assert_eq!(GridLabel::new(Dir::N, Kind::Alpha, false, false).code(), 1);
        assert_eq!(GridLabel::new(Dir::W, Kind::Alpha, false, false).code(), 2);
        assert!(!codes.contains(&3) && !codes.contains(&4));
        assert_eq!(*codes.iter().max().unwrap(), GRID_MAX_CODE);
        let sk = SkeletonCodes::default();
        for (_, c) in sk.named() {
            assert!(!codes.contains(&c));
        }
    }

    #[test]
    fn skeleton_parities() {
        let sk = SkeletonCodes::default();
        for c in [sk.alpha, sk.beta0, sk.eta0, sk.gamma0, sk.omega0] {
            assert_eq!(c % 2, 0);
        }
        for c in [sk.beta1, sk.eta1, sk.gamma1, sk.eta11] {
            assert_eq!(c % 2, 1);
        }
    }
}
