//! Level 0: concrete spiders, spider queries, binary queries, the spider
//! algebra rule and the swarm compile/decompile maps.
//!
//! Anatomy of one spider with `s` leg pairs: a head atom `H(head, tail,
//! antenna)`; for every code `j` an upper thigh `Tu<j>(head, knee)` with calf
//! `Cu<j>(knee, @c)` and a lower thigh `Tl<j>(head, knee)` with calf
//! `Cl<j>(knee, @c)`.  All calves end in the single constant `@c`.  An ideal
//! spider of color X has every atom in color X except the calves of its (at
//! most one) deviant upper leg and (at most one) deviant lower leg.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::labgraph::LabeledGraph;
use crate::relcore::{colored, Color, ConjunctiveQuery, Elem, Structure};

pub const CALF_END: &str = "@c";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpiderError {
    #[error("query f^{query} does not match spider {spider}")]
    NoMatch { query: String, spider: String },
    #[error("label code {code} is outside 1..={s}")]
    Unregistered { code: u32, s: u32 },
}

/// The code universe `{1, ..., s}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelUniverse {
    pub s: u32,
}

impl LabelUniverse {
    /// Codes 1 to 4 are always present.
    pub fn new(max_code: u32) -> Self {
        LabelUniverse { s: max_code.max(4) }
    }

    pub fn check(&self, code: Option<u32>) -> Result<(), SpiderError> {
        match code {
            Some(c) if c == 0 || c > self.s => Err(SpiderError::Unregistered { code: c, s: self.s }),
            _ => Ok(()),
        }
    }

    pub fn codes(&self) -> impl Iterator<Item = u32> {
        1..=self.s
    }
}

pub fn is_even(code: u32) -> bool {
    code % 2 == 0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Leg {
    Upper(u32),
    Lower(u32),
}

impl Leg {
    pub fn thigh(self) -> String {
        match self {
            Leg::Upper(j) => format!("Tu{j}"),
            Leg::Lower(j) => format!("Tl{j}"),
        }
    }

    pub fn calf(self) -> String {
        match self {
            Leg::Upper(j) => format!("Cu{j}"),
            Leg::Lower(j) => format!("Cl{j}"),
        }
    }

    fn tag(self) -> String {
        match self {
            Leg::Upper(j) => format!("u{j}"),
            Leg::Lower(j) => format!("l{j}"),
        }
    }

    pub fn all(s: u32) -> impl Iterator<Item = Leg> {
        (1..=s).flat_map(|j| [Leg::Upper(j), Leg::Lower(j)])
    }
}

/// `Sp_X^{I}_{J}` with `|I|, |J| <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IdealSpider {
    pub color: Color,
    pub upper: Option<u32>,
    pub lower: Option<u32>,
}

impl IdealSpider {
    pub fn new(color: Color, upper: Option<u32>, lower: Option<u32>) -> Self {
        IdealSpider { color, upper, lower }
    }

    pub fn full(color: Color) -> Self {
        Self::new(color, None, None)
    }

    pub fn green(upper: Option<u32>, lower: Option<u32>) -> Self {
        Self::new(Color::Green, upper, lower)
    }

    pub fn red(upper: Option<u32>, lower: Option<u32>) -> Self {
        Self::new(Color::Red, upper, lower)
    }

    pub fn is_full(&self) -> bool {
        self.upper.is_none() && self.lower.is_none()
    }

    pub fn is_lower(&self) -> bool {
        self.lower.is_some()
    }

    /// Color of the calf on a given leg.
    pub fn calf_color(&self, leg: Leg) -> Color {
        let deviant = match leg {
            Leg::Upper(j) => self.upper == Some(j),
            Leg::Lower(j) => self.lower == Some(j),
        };
        if deviant {
            self.color.opposite()
        } else {
            self.color
        }
    }
}

fn set_str(x: Option<u32>) -> String {
    x.map_or(String::new(), |v| v.to_string())
}

impl fmt::Display for IdealSpider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}|{}]", self.color.letter(), set_str(self.upper), set_str(self.lower))
    }
}

#[derive(Serialize, Deserialize)]
struct SpiderRepr {
    color: Color,
    upper: Vec<u32>,
    lower: Vec<u32>,
}

impl Serialize for IdealSpider {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        SpiderRepr {
            color: self.color,
            upper: self.upper.into_iter().collect(),
            lower: self.lower.into_iter().collect(),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for IdealSpider {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let r = SpiderRepr::deserialize(de)?;
        if r.upper.len() > 1 || r.lower.len() > 1 {
            return Err(serde::de::Error::custom(
                "an ideal spider has at most one deviant leg on each side",
            ));
        }
        Ok(IdealSpider {
            color: r.color,
            upper: r.upper.first().copied(),
            lower: r.lower.first().copied(),
        })
    }
}

/// The spider algebra rule: `f^I_J` applied to a spider with deviant legs
/// `(I', J')` yields the opposite-color spider `(I \ I', J \ J')`, provided
/// `I' ⊆ I` and `J' ⊆ J`.
pub fn apply_spider_algebra(
    upper: Option<u32>,
    lower: Option<u32>,
    spider: IdealSpider,
) -> Result<IdealSpider, SpiderError> {
    let sub = |a: Option<u32>, b: Option<u32>| b.is_none() || a == b;
    if !sub(upper, spider.upper) || !sub(lower, spider.lower) {
        return Err(SpiderError::NoMatch {
            query: format!("[{}|{}]", set_str(upper), set_str(lower)),
            spider: spider.to_string(),
        });
    }
    let minus = |a: Option<u32>, b: Option<u32>| if a == b { None } else { a };
    Ok(IdealSpider {
        color: spider.color.opposite(),
        upper: minus(upper, spider.upper),
        lower: minus(lower, spider.lower),
    })
}

fn add_vertex(st: &mut Structure, name: &str) -> Elem {
    if name == "a" || name == "b" {
        st.add_constant(name)
    } else {
        st.add_element(name)
    }
}

/// Adds one concrete spider to `st`; knees are `<prefix>k<leg>`, the head
/// is `<prefix>h`.  Swarm constants `a`/`b` stay constants.
pub fn add_spider(st: &mut Structure, kind: IdealSpider, s: u32, tail: &str, antenna: &str, prefix: &str) {
    let c = st.add_constant(CALF_END);
    let head = st.add_element(&format!("{prefix}h"));
    let t = add_vertex(st, tail);
    let y = add_vertex(st, antenna);
    let h = st
        .declare_predicate(&colored(kind.color, "H"), 3)
        .expect("H is ternary");
    st.add_atom_ids(h, &[head, t, y]);
    for leg in Leg::all(s) {
        let knee = st.add_element(&format!("{prefix}k{}", leg.tag()));
        let tp = st.declare_predicate(&colored(kind.color, &leg.thigh()), 2).expect("binary");
        st.add_atom_ids(tp, &[head, knee]);
        let cp = st
            .declare_predicate(&colored(kind.calf_color(leg), &leg.calf()), 2)
            .expect("binary");
        st.add_atom_ids(cp, &[knee, c]);
    }
}

/// A single concrete spider with the given tail and antenna.
pub fn make_spider(kind: IdealSpider, s: u32, tail: &str, antenna: &str, prefix: &str) -> Structure {
    let mut st = Structure::new();
    add_spider(&mut st, kind, s, tail, antenna, prefix);
    st
}

/// The uncolored canonical structure of `f^I_J`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpiderQuery {
    pub upper: Option<u32>,
    pub lower: Option<u32>,
    pub s: u32,
    pub canonical: ConjunctiveQuery,
    pub tail: Elem,
    pub antenna: Elem,
}

impl SpiderQuery {
    pub fn label(&self) -> String {
        format!("f[{}|{}]", set_str(self.upper), set_str(self.lower))
    }

    fn magic_legs(&self) -> Vec<Leg> {
        self.upper
            .map(Leg::Upper)
            .into_iter()
            .chain(self.lower.map(Leg::Lower))
            .collect()
    }
}

/// Full spider minus the calves of the legs in `I ∪ J`; the tail and the
/// knees of those legs are free.
pub fn spider_query(
    universe: LabelUniverse,
    upper: Option<u32>,
    lower: Option<u32>,
) -> Result<SpiderQuery, SpiderError> {
    universe.check(upper)?;
    universe.check(lower)?;
    let s = universe.s;
    let mut st = Structure::new();
    let c = st.add_constant(CALF_END);
    let head = st.add_element("h");
    let tail = st.add_element("t");
    let antenna = st.add_element("y");
    let h = st.declare_predicate("H", 3).expect("ternary");
    st.add_atom_ids(h, &[head, tail, antenna]);
    for leg in Leg::all(s) {
        let kname = format!("k{}", leg.tag());
        let knee = st.add_element(&kname);
        let tp = st.declare_predicate(&leg.thigh(), 2).expect("binary");
        st.add_atom_ids(tp, &[head, knee]);
        let magic = matches!(leg, Leg::Upper(j) if upper == Some(j))
            || matches!(leg, Leg::Lower(j) if lower == Some(j));
        if !magic {
            let cp = st.declare_predicate(&leg.calf(), 2).expect("binary");
            st.add_atom_ids(cp, &[knee, c]);
        }
    }
    let mut ordered = vec!["t".to_string()];
    if let Some(j) = upper {
        ordered.push(format!("ku{j}"));
    }
    if let Some(j) = lower {
        ordered.push(format!("kl{j}"));
    }
    let refs: Vec<&str> = ordered.iter().map(|x| x.as_str()).collect();
    let canonical = ConjunctiveQuery::new(st, &refs).expect("free names exist");
    Ok(SpiderQuery {
        upper,
        lower,
        s,
        canonical,
        tail,
        antenna,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    /// Shared antenna (target).
    #[serde(rename = "wedge")]
    Wedge,
    /// Shared tail (source).
    #[serde(rename = "vee")]
    Vee,
}

impl Mode {
    pub fn symbol(self) -> &'static str {
        match self {
            Mode::Wedge => "⩚",
            Mode::Vee => "⩛",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryQuery {
    pub left: SpiderQuery,
    pub right: SpiderQuery,
    pub mode: Mode,
    pub canonical: ConjunctiveQuery,
}

impl BinaryQuery {
    pub fn label(&self) -> String {
        format!("{} {} {}", self.left.label(), self.mode.symbol(), self.right.label())
    }
}

/// Glues two spider queries: `Wedge` identifies the antennas (quantified)
/// and frees both tails; `Vee` identifies the tails (quantified) and frees
/// both antennas.  Magic knees of both sides stay free.
pub fn binary_query(f: &SpiderQuery, g: &SpiderQuery, mode: Mode) -> BinaryQuery {
    let mut st = Structure::new();
    let rename = |side: &str, q: &SpiderQuery| {
        let tail = q.tail;
        let antenna = q.antenna;
        let side = side.to_string();
        q.canonical.canonical.renamed_by_id(move |e, name| match mode {
            Mode::Wedge if e == antenna => "y".to_string(),
            Mode::Vee if e == tail => "x".to_string(),
            _ => format!("{side}.{name}"),
        })
    };
    let l = rename("l", f);
    let r = rename("r", g);
    st.absorb(&l);
    st.absorb(&r);
    let mut free: Vec<String> = Vec::new();
    let ends = match mode {
        Mode::Wedge => ["l.t", "r.t"],
        Mode::Vee => ["l.y", "r.y"],
    };
    free.extend(ends.iter().map(|x| x.to_string()));
    for (side, q) in [("l", f), ("r", g)] {
        for leg in q.magic_legs() {
            free.push(format!("{side}.k{}", leg.tag()));
        }
    }
    let refs: Vec<&str> = free.iter().map(|x| x.as_str()).collect();
    BinaryQuery {
        left: f.clone(),
        right: g.clone(),
        mode,
        canonical: ConjunctiveQuery::new(st, &refs).expect("free names exist"),
    }
}

pub type Swarm = LabeledGraph<IdealSpider>;

fn knee_class(color: Color, leg: Leg) -> String {
    format!("^k.{}.{}", color.letter(), leg.tag())
}

/// Each edge becomes a real spider; knees are then merged by calf predicate
/// and calf color, so the result has `4s` knee elements in total.
pub fn compile_swarm(m: &Swarm, s: u32) -> Structure {
    let mut st = Structure::new();
    let c = st.add_constant(CALF_END);
    st.add_constant("a");
    st.add_constant("b");
    for v in m.vertices() {
        add_vertex(&mut st, m.name(v));
    }
    let mut knees: HashMap<(Color, Leg), Elem> = HashMap::new();
    for (i, e) in m.edges().iter().enumerate() {
        let sp = e.label;
        let head = st.add_element(&format!("^h{i}"));
        let t = st.lookup(m.name(e.src)).expect("vertex added");
        let y = st.lookup(m.name(e.dst)).expect("vertex added");
        let h = st.declare_predicate(&colored(sp.color, "H"), 3).expect("ternary");
        st.add_atom_ids(h, &[head, t, y]);
        for leg in Leg::all(s) {
            let cc = sp.calf_color(leg);
            let knee = *knees.entry((cc, leg)).or_insert_with(|| {
                let k = st.add_element(&knee_class(cc, leg));
                let cp = st
                    .declare_predicate(&colored(cc, &leg.calf()), 2)
                    .expect("binary");
                st.add_atom_ids(cp, &[k, c]);
                k
            });
            let tp = st.declare_predicate(&colored(sp.color, &leg.thigh()), 2).expect("binary");
            st.add_atom_ids(tp, &[head, knee]);
        }
    }
    st
}

/// The ideal spider whose real copy has head `h`, if `h` heads one.
fn read_spider(d: &Structure, h: Elem, color: Color, s: u32, c: Elem) -> Option<IdealSpider> {
    let mut upper = None;
    let mut lower = None;
    for leg in Leg::all(s) {
        let mut knee = None;
        for col in [Color::Green, Color::Red] {
            if let Some(p) = d.pred_id(&colored(col, &leg.thigh())) {
                let found = d.atoms_at(p, 0, h);
                if !found.is_empty() {
                    if col != color || found.len() > 1 || knee.is_some() {
                        return None;
                    }
                    knee = Some(d.atom(found[0]).1[1]);
                }
            }
        }
        let knee = knee?;
        let mut calf = None;
        for col in [Color::Green, Color::Red] {
            if let Some(p) = d.pred_id(&colored(col, &leg.calf())) {
                for &i in d.atoms_at(p, 0, knee) {
                    if d.atom(i).1[1] != c || calf.is_some() {
                        return None;
                    }
                    calf = Some(col);
                }
            }
        }
        if calf? != color {
            let slot = match leg {
                Leg::Upper(_) => &mut upper,
                Leg::Lower(_) => &mut lower,
            };
            if slot.is_some() {
                return None;
            }
            *slot = Some(match leg {
                Leg::Upper(j) | Leg::Lower(j) => j,
            });
        }
    }
    Some(IdealSpider { color, upper, lower })
}

/// One swarm edge per head atom whose head carries a real spider.
pub fn decompile_structure(d: &Structure, s: u32) -> Swarm {
    let mut m = Swarm::new();
    let Some(c) = d.lookup(CALF_END) else {
        return m;
    };
    let mut heads: Vec<(Elem, Elem, Elem, Color)> = Vec::new();
    for color in [Color::Green, Color::Red] {
        if let Some(p) = d.pred_id(&colored(color, "H")) {
            for &i in d.atoms_of(p) {
                let args = d.atom(i).1;
                heads.push((args[0], args[1], args[2], color));
            }
        }
    }
    let mut head_count: HashMap<Elem, usize> = HashMap::new();
    for &(h, ..) in &heads {
        *head_count.entry(h).or_insert(0) += 1;
    }
    heads.sort_by_key(|&(h, ..)| h);
    for (h, t, y, color) in heads {
        if head_count[&h] != 1 {
            continue;
        }
        if let Some(sp) = read_spider(d, h, color, s, c) {
            m.add_named(sp, d.name(t), d.name(y));
        }
    }
    m
}

/// `dalt(Sp_G)` as a boolean query (`∃* dalt(Sp_G)`).
pub fn full_spider_query(s: u32) -> ConjunctiveQuery {
    let st = make_spider(IdealSpider::full(Color::Green), s, "t", "y", "");
    ConjunctiveQuery::new(crate::relcore::dalt(&st), &[]).expect("boolean")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chase::{apply_in_place, tgd_from_cq, triggers, Direction};
    use crate::relcore::exists_homomorphism;

    #[test]
    fn spider_atom_count() {
        let st = make_spider(IdealSpider::full(Color::Green), 7, "a", "b", "");
        assert_eq!(st.num_atoms(), 1 + 4 * 7);
        assert!(st.atom_strings().iter().all(|(p, _)| p.starts_with("G:")));
    }

    #[test]
    fn algebra_examples() {
        let r = apply_spider_algebra(Some(1), Some(2), IdealSpider::red(Some(1), None)).unwrap();
        assert_eq!(r, IdealSpider::green(None, Some(2)));
        let r = apply_spider_algebra(None, None, IdealSpider::full(Color::Red)).unwrap();
        assert_eq!(r, IdealSpider::full(Color::Green));
        assert!(apply_spider_algebra(Some(1), None, IdealSpider::red(Some(2), None)).is_err());
    }

    #[test]
    fn decompile_single_and_dangling() {
        let st = make_spider(IdealSpider::green(None, Some(7)), 8, "a", "b", "");
        let m = decompile_structure(&st, 8);
        assert_eq!(m.num_edges(), 1);
        assert!(m.has_named(IdealSpider::green(None, Some(7)), "a", "b"));
        let mut d = Structure::new();
        d.add_constant(CALF_END);
        d.add_atom("G:H", &["h", "a", "b"]).unwrap();
        assert_eq!(decompile_structure(&d, 4).num_edges(), 0);
    }

    #[test]
    fn binary_query_free_variables() {
        let u = LabelUniverse::new(6);
        let f1 = spider_query(u, Some(1), Some(1)).unwrap();
        let f2 = spider_query(u, Some(2), Some(2)).unwrap();
        let w = binary_query(&f1, &f2, Mode::Wedge);
        assert_eq!(
            w.canonical.free_names(),
            vec!["l.t", "r.t", "l.ku1", "l.kl1", "r.ku2", "r.kl2"]
        );
        assert!(w.canonical.canonical.lookup("y").is_some());
        let v = binary_query(&f1, &f1, Mode::Vee);
        let tails = v
            .canonical
            .canonical
            .atom_strings()
            .into_iter()
            .filter(|(p, _)| p == "H")
            .map(|(_, a)| a[1].clone())
            .collect::<std::collections::BTreeSet<_>>();
        assert_eq!(tails.len(), 1);
    }

    #[test]
    fn single_query_transfers_color() {
        let u = LabelUniverse::new(5);
        let f = spider_query(u, Some(1), Some(2)).unwrap();
        let t = tgd_from_cq(&f.canonical, Direction::RedToGreen, "f").unwrap();
        let mut d = make_spider(IdealSpider::red(Some(1), None), 5, "a", "b", "s.");
        let trig: Vec<_> = triggers(&d, &t).into_iter().collect();
        assert_eq!(trig.len(), 1);
        let mut counter = 0;
        apply_in_place(&mut d, &t, &trig[0], &mut counter).unwrap();
        let m = decompile_structure(&d, 5);
        assert!(m
            .edges()
            .iter()
            .any(|e| e.label == IdealSpider::green(None, Some(2)) && m.name(e.src) == "a"));
    }

    #[test]
    fn full_spider_query_matches_compiled_spider() {
        let mut m = Swarm::new();
        m.add_edge(IdealSpider::full(Color::Green), crate::labgraph::A, crate::labgraph::B);
        let st = crate::relcore::dalt(&compile_swarm(&m, 6));
        assert!(exists_homomorphism(&full_spider_query(6).canonical, &st, &[]));
    }
}
