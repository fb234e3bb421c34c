//! Edge-labelled directed graphs with named vertices.
//!
//! Swarms and green graphs are both instances.  Vertices `a` and `b` are
//! constants and always present (ids 0 and 1).  Edges are deduplicated and
//! kept in insertion order together with the stage that created them.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::hash::Hash;

pub type Vertex = u32;

pub const A: Vertex = 0;
pub const B: Vertex = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge<L> {
    pub label: L,
    pub src: Vertex,
    pub dst: Vertex,
}

#[derive(Debug, Clone)]
pub struct LabeledGraph<L> {
    names: Vec<String>,
    index: HashMap<String, Vertex>,
    edges: Vec<Edge<L>>,
    born: Vec<usize>,
    set: HashSet<Edge<L>>,
    out: Vec<Vec<u32>>,
    inc: Vec<Vec<u32>>,
    by_label_src: HashMap<(L, Vertex), Vec<u32>>,
    by_label_dst: HashMap<(L, Vertex), Vec<u32>>,
    by_label: HashMap<L, Vec<u32>>,
}

impl<L: Copy + Eq + Hash + Ord> Default for LabeledGraph<L> {
    fn default() -> Self {
        Self::new()
    }
}

impl<L: Copy + Eq + Hash + Ord> LabeledGraph<L> {
    /// A graph holding only the constants `a` and `b`.
    pub fn new() -> Self {
        let mut g = LabeledGraph {
            names: Vec::new(),
            index: HashMap::new(),
            edges: Vec::new(),
            born: Vec::new(),
            set: HashSet::new(),
            out: Vec::new(),
            inc: Vec::new(),
            by_label_src: HashMap::new(),
            by_label_dst: HashMap::new(),
            by_label: HashMap::new(),
        };
        g.add_vertex("a");
        g.add_vertex("b");
        g
    }

    pub fn is_constant(&self, v: Vertex) -> bool {
        v == A || v == B
    }

    pub fn add_vertex(&mut self, name: &str) -> Vertex {
        if let Some(&v) = self.index.get(name) {
            return v;
        }
        let v = self.names.len() as Vertex;
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), v);
        self.out.push(Vec::new());
        self.inc.push(Vec::new());
        v
    }

    /// A new vertex `<prefix><n>` with `n >= *counter`.
    pub fn fresh_vertex(&mut self, prefix: &str, counter: &mut u64) -> Vertex {
        loop {
            let name = format!("{prefix}{counter}");
            *counter += 1;
            if !self.index.contains_key(&name) {
                return self.add_vertex(&name);
            }
        }
    }

    pub fn lookup(&self, name: &str) -> Option<Vertex> {
        self.index.get(name).copied()
    }

    pub fn name(&self, v: Vertex) -> &str {
        &self.names[v as usize]
    }

    pub fn num_vertices(&self) -> usize {
        self.names.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> {
        0..self.names.len() as Vertex
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge<L>] {
        &self.edges
    }

    pub fn edge(&self, i: u32) -> Edge<L> {
        self.edges[i as usize]
    }

    /// Stage annotation of edge `i` (0 for input edges).
    pub fn born(&self, i: u32) -> usize {
        self.born[i as usize]
    }

    pub fn add_edge(&mut self, label: L, src: Vertex, dst: Vertex) -> bool {
        self.add_edge_at(label, src, dst, 0)
    }

    pub fn add_edge_at(&mut self, label: L, src: Vertex, dst: Vertex, stage: usize) -> bool {
        let e = Edge { label, src, dst };
        if !self.set.insert(e) {
            return false;
        }
        let i = self.edges.len() as u32;
        self.edges.push(e);
        self.born.push(stage);
        self.out[src as usize].push(i);
        self.inc[dst as usize].push(i);
        self.by_label_src.entry((label, src)).or_default().push(i);
        self.by_label_dst.entry((label, dst)).or_default().push(i);
        self.by_label.entry(label).or_default().push(i);
        true
    }

    /// Adds an edge between named vertices, creating them on demand.
    pub fn add_named(&mut self, label: L, src: &str, dst: &str) -> bool {
        let s = self.add_vertex(src);
        let d = self.add_vertex(dst);
        self.add_edge(label, s, d)
    }

    pub fn has_edge(&self, label: L, src: Vertex, dst: Vertex) -> bool {
        self.set.contains(&Edge { label, src, dst })
    }

    pub fn has_named(&self, label: L, src: &str, dst: &str) -> bool {
        match (self.lookup(src), self.lookup(dst)) {
            (Some(s), Some(d)) => self.has_edge(label, s, d),
            _ => false,
        }
    }

    pub fn out_edges(&self, v: Vertex) -> &[u32] {
        &self.out[v as usize]
    }

    pub fn in_edges(&self, v: Vertex) -> &[u32] {
        &self.inc[v as usize]
    }

    pub fn with_label_src(&self, label: L, src: Vertex) -> &[u32] {
        self.by_label_src
            .get(&(label, src))
            .map_or(&[], |v| v.as_slice())
    }

    pub fn with_label_dst(&self, label: L, dst: Vertex) -> &[u32] {
        self.by_label_dst
            .get(&(label, dst))
            .map_or(&[], |v| v.as_slice())
    }

    pub fn with_label(&self, label: L) -> &[u32] {
        self.by_label.get(&label).map_or(&[], |v| v.as_slice())
    }

    pub fn labels(&self) -> BTreeSet<L> {
        self.edges.iter().map(|e| e.label).collect()
    }

    /// Edges as `(label, src name, dst name)`, sorted.
    pub fn named_edges(&self) -> BTreeSet<(L, String, String)> {
        self.edges
            .iter()
            .map(|e| (e.label, self.name(e.src).to_string(), self.name(e.dst).to_string()))
            .collect()
    }

    /// A graph over the same vertex names with the edges accepted by `keep`,
    /// relabelled by `f`.
    pub fn map_edges<M: Copy + Eq + Hash + Ord>(
        &self,
        mut f: impl FnMut(&Edge<L>) -> Option<M>,
    ) -> LabeledGraph<M> {
        let mut g = LabeledGraph::new();
        for v in self.vertices() {
            g.add_vertex(self.name(v));
        }
        for (i, e) in self.edges.iter().enumerate() {
            if let Some(m) = f(e) {
                g.add_edge_at(m, e.src, e.dst, self.born[i]);
            }
        }
        g
    }

    /// Copies the edges of `other`, matching vertices by name.
    pub fn absorb(&mut self, other: &LabeledGraph<L>) {
        for (i, e) in other.edges.iter().enumerate() {
            let s = self.add_vertex(other.name(e.src));
            let d = self.add_vertex(other.name(e.dst));
            self.add_edge_at(e.label, s, d, other.born[i]);
        }
    }

    /// Same graph (same vertex ids) with vertex `v` renamed to `f(v, name)`.
    /// `a` and `b` keep their names; the new names must be distinct.
    pub fn renamed(&self, mut f: impl FnMut(Vertex, &str) -> String) -> LabeledGraph<L> {
        let mut g = LabeledGraph::new();
        for v in self.vertices().skip(2) {
            let name = f(v, self.name(v));
            let id = g.add_vertex(&name);
            assert_eq!(id, v, "renaming must keep vertex names distinct");
        }
        for (i, e) in self.edges.iter().enumerate() {
            g.add_edge_at(e.label, e.src, e.dst, self.born[i]);
        }
        g
    }

    /// Stage at which `v` first received an edge (0 for `a`, `b` and input
    /// vertices; `usize::MAX` for isolated vertices).
    pub fn vertex_stage(&self, v: Vertex) -> usize {
        if self.is_constant(v) {
            return 0;
        }
        self.out[v as usize]
            .iter()
            .chain(self.inc[v as usize].iter())
            .map(|&i| self.born[i as usize])
            .min()
            .unwrap_or(usize::MAX)
    }

    /// Keeps only the vertices that touch an edge, plus `a` and `b`.
    pub fn compacted(&self) -> LabeledGraph<L> {
        let mut g = LabeledGraph::new();
        for (i, e) in self.edges.iter().enumerate() {
            let s = g.add_vertex(self.name(e.src));
            let d = g.add_vertex(self.name(e.dst));
            g.add_edge_at(e.label, s, d, self.born[i]);
        }
        g
    }

    /// An isomorphism fixing `a` and `b`, if any (vertices without edges
    /// other than the constants are ignored).
    pub fn isomorphic(&self, other: &LabeledGraph<L>) -> bool {
        let x = self.compacted();
        let y = other.compacted();
        if x.num_vertices() != y.num_vertices() || x.num_edges() != y.num_edges() {
            return false;
        }
        let count = |g: &LabeledGraph<L>| -> BTreeMap<L, usize> {
            let mut m = BTreeMap::new();
            for e in &g.edges {
                *m.entry(e.label).or_insert(0) += 1;
            }
            m
        };
        if count(&x) != count(&y) {
            return false;
        }
        let mut map = vec![None; x.num_vertices()];
        let mut used = vec![false; y.num_vertices()];
        map[A as usize] = Some(A);
        map[B as usize] = Some(B);
        used[A as usize] = true;
        used[B as usize] = true;
        // Vertex order: BFS from the constants so every step is anchored.
        let order = x.bfs_order();
        iso_extend(&x, &y, &order, 0, &mut map, &mut used)
    }

    fn bfs_order(&self) -> Vec<Vertex> {
        let mut seen = vec![false; self.num_vertices()];
        let mut order = Vec::new();
        let mut queue = std::collections::VecDeque::new();
        seen[A as usize] = true;
        seen[B as usize] = true;
        queue.push_back(A);
        queue.push_back(B);
        loop {
            while let Some(v) = queue.pop_front() {
                for &i in self.out[v as usize].iter().chain(self.inc[v as usize].iter()) {
                    let e = self.edges[i as usize];
                    for w in [e.src, e.dst] {
                        if !seen[w as usize] {
                            seen[w as usize] = true;
                            order.push(w);
                            queue.push_back(w);
                        }
                    }
                }
            }
            match (0..self.num_vertices()).find(|&v| !seen[v]) {
                Some(v) => {
                    seen[v] = true;
                    order.push(v as Vertex);
                    queue.push_back(v as Vertex);
                }
                None => break,
            }
        }
        order
    }
}

fn iso_extend<L: Copy + Eq + Hash + Ord>(
    x: &LabeledGraph<L>,
    y: &LabeledGraph<L>,
    order: &[Vertex],
    k: usize,
    map: &mut Vec<Option<Vertex>>,
    used: &mut Vec<bool>,
) -> bool {
    if k == order.len() {
        return x.edges.iter().all(|e| {
            y.has_edge(e.label, map[e.src as usize].unwrap(), map[e.dst as usize].unwrap())
        });
    }
    let v = order[k];
    let want_deg = (x.out[v as usize].len(), x.inc[v as usize].len());
    // Candidates: neighbours of an already mapped neighbour, else everything.
    let mut cands: Vec<Vertex> = Vec::new();
    let anchor = x.out[v as usize]
        .iter()
        .map(|&i| (x.edges[i as usize], false))
        .chain(x.inc[v as usize].iter().map(|&i| (x.edges[i as usize], true)))
        .find(|(e, incoming)| {
            let other = if *incoming { e.src } else { e.dst };
            map[other as usize].is_some()
        });
    if let Some((e, incoming)) = anchor {
        if incoming {
            let s = map[e.src as usize].unwrap();
            for &i in y.with_label_src(e.label, s) {
                cands.push(y.edges[i as usize].dst);
            }
        } else {
            let d = map[e.dst as usize].unwrap();
            for &i in y.with_label_dst(e.label, d) {
                cands.push(y.edges[i as usize].src);
            }
        }
        cands.sort_unstable();
        cands.dedup();
    } else {
        cands = y.vertices().collect();
    }
    for c in cands {
        if used[c as usize] {
            continue;
        }
        if (y.out[c as usize].len(), y.inc[c as usize].len()) != want_deg {
            continue;
        }
        map[v as usize] = Some(c);
        // Local check: every edge between v and mapped vertices must exist.
        let ok = x.out[v as usize].iter().all(|&i| {
                let e = x.edges[i as usize];
                match map[e.dst as usize] {
                    Some(d) => y.has_edge(e.label, c, d),
                    None => true,
                }
            })
            && x.inc[v as usize].iter().all(|&i| {
                let e = x.edges[i as usize];
                match map[e.src as usize] {
                    Some(s) => y.has_edge(e.label, s, c),
                    None => true,
                }
            });
        if ok {
            used[c as usize] = true;
            if iso_extend(x, y, order, k + 1, map, used) {
                return true;
            }
            used[c as usize] = false;
        }
        map[v as usize] = None;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_and_dedup() {
        let mut g: LabeledGraph<u32> = LabeledGraph::new();
        assert_eq!(g.lookup("a"), Some(A));
        assert_eq!(g.lookup("b"), Some(B));
        assert!(g.add_named(3, "a", "x"));
        assert!(!g.add_named(3, "a", "x"));
        assert_eq!(g.num_edges(), 1);
        assert_eq!(g.with_label_src(3, A).len(), 1);
    }

    #[test]
    fn isomorphism_up_to_names() {
        let mut g: LabeledGraph<u32> = LabeledGraph::new();
        g.add_named(1, "a", "x");
        g.add_named(2, "x", "b");
        g.add_named(2, "y", "x");
        let mut h: LabeledGraph<u32> = LabeledGraph::new();
        h.add_named(2, "q", "p");
        h.add_named(1, "a", "p");
        h.add_named(2, "p", "b");
        assert!(g.isomorphic(&h));
        let mut k: LabeledGraph<u32> = LabeledGraph::new();
        k.add_named(1, "a", "p");
        k.add_named(2, "p", "b");
        k.add_named(2, "p", "q");
        assert!(!g.isomorphic(&k));
    }
}
