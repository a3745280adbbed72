//! Canonical forms and labeled isomorphism for [`LabeledGraph`].
//!
//! The canonical form is computed by iterative color refinement to a
//! stable (equitable) coloring, followed by a backtracking search over
//! individualizations that minimizes a total adjacency encoding. Leaves
//! of the search tree that encode identically yield automorphisms; their
//! orbits prune the root cell, which keeps label-poor symmetric graphs
//! (cycles, tori) tractable. The search is exact: certificates of two
//! graphs agree exactly when the graphs are labeled-isomorphic.

use std::collections::BTreeMap;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use crate::graph::{Edge, EdgeId, End, LabeledGraph, LabeledIsomorphism, Sym, VertexId};

/// Marker used as the "neighbor color" of an open edge end.
const FREE_MARK: u32 = u32::MAX;

/// A stable byte certificate: equal exactly for labeled-isomorphic graphs.
pub type Certificate = Vec<u8>;

/// Compact indexed view of a graph, shared by the canonizer and the
/// isomorphism search.
struct Indexed {
    verts: Vec<VertexId>,
    vsym_tab: Vec<Sym>,
    esym_tab: Vec<Sym>,
    vsym: Vec<u32>,
    /// Per vertex: (edge symbol code, neighbor index) for closed edges.
    adj: Vec<Vec<(u32, usize)>>,
    /// Per vertex: symbol codes of incident half-open edges.
    half: Vec<Vec<u32>>,
    /// Symbol codes of fully open (floating) edges, sorted.
    floating: Vec<u32>,
    /// Closed edges as (vertex index, vertex index, symbol code).
    closed: Vec<(usize, usize, u32)>,
}

impl Indexed {
    fn build(g: &LabeledGraph) -> Indexed {
        let verts: Vec<VertexId> = g.vertex_ids().collect();
        let pos: BTreeMap<VertexId, usize> =
            verts.iter().enumerate().map(|(i, v)| (*v, i)).collect();

        let mut vsym_tab: Vec<Sym> = g.vertices().map(|(_, s)| s.clone()).collect();
        vsym_tab.sort();
        vsym_tab.dedup();
        let mut esym_tab: Vec<Sym> = g.edges().map(|(_, e)| e.sym.clone()).collect();
        esym_tab.sort();
        esym_tab.dedup();

        let vcode = |s: &Sym| vsym_tab.binary_search(s).expect("in table") as u32;
        let ecode = |s: &Sym| esym_tab.binary_search(s).expect("in table") as u32;

        let vsym: Vec<u32> = verts
            .iter()
            .map(|v| vcode(g.vertex_sym(*v).expect("vertex exists")))
            .collect();

        let mut adj = vec![Vec::new(); verts.len()];
        let mut half = vec![Vec::new(); verts.len()];
        let mut floating = Vec::new();
        let mut closed = Vec::new();
        for (_, e) in g.edges() {
            let c = ecode(&e.sym);
            match e.ends {
                (End::Vertex(a), End::Vertex(b)) => {
                    let (ia, ib) = (pos[&a], pos[&b]);
                    adj[ia].push((c, ib));
                    adj[ib].push((c, ia));
                    closed.push((ia.min(ib), ia.max(ib), c));
                }
                (End::Vertex(a), End::Free) | (End::Free, End::Vertex(a)) => {
                    half[pos[&a]].push(c);
                }
                (End::Free, End::Free) => floating.push(c),
            }
        }
        for h in &mut half {
            h.sort_unstable();
        }
        floating.sort_unstable();

        Indexed {
            verts,
            vsym_tab,
            esym_tab,
            vsym,
            adj,
            half,
            floating,
            closed,
        }
    }

    fn n(&self) -> usize {
        self.verts.len()
    }

    /// Initial coloring by vertex symbol plus half-edge profile.
    fn initial_colors(&self) -> Vec<u32> {
        let mut keyed: Vec<(&u32, &Vec<u32>, usize)> = (0..self.n())
            .map(|i| (&self.vsym[i], &self.half[i], i))
            .collect();
        keyed.sort();
        let mut colors = vec![0u32; self.n()];
        let mut color = 0u32;
        for w in 0..keyed.len() {
            if w > 0 && (keyed[w].0, keyed[w].1) != (keyed[w - 1].0, keyed[w - 1].1) {
                color += 1;
            }
            colors[keyed[w].2] = color;
        }
        colors
    }

    /// Refines to the coarsest stable coloring compatible with the input
    /// ordered coloring. Deterministic and isomorphism-equivariant.
    fn refine(&self, colors: &mut Vec<u32>) {
        let n = self.n();
        if n == 0 {
            return;
        }
        let mut count = colors.iter().max().map(|m| m + 1).unwrap_or(0);
        loop {
            let mut keyed: Vec<(u32, Vec<(u32, u32)>, usize)> = (0..n)
                .map(|i| {
                    let mut sig: Vec<(u32, u32)> = self.adj[i]
                        .iter()
                        .map(|&(c, j)| (c, colors[j]))
                        .collect();
                    for &c in &self.half[i] {
                        sig.push((c, FREE_MARK));
                    }
                    sig.sort_unstable();
                    (colors[i], sig, i)
                })
                .collect();
            keyed.sort();
            let mut next = vec![0u32; n];
            let mut color = 0u32;
            for w in 0..n {
                if w > 0 && (keyed[w].0, &keyed[w].1) != (keyed[w - 1].0, &keyed[w - 1].1) {
                    color += 1;
                }
                next[keyed[w].2] = color;
            }
            *colors = next;
            let new_count = color + 1;
            if new_count == count {
                return;
            }
            count = new_count;
        }
    }

    /// Splits `v` off at the front of its cell, shifting later cells up.
    fn individualize(&self, colors: &[u32], v: usize) -> Vec<u32> {
        let cv = colors[v];
        colors
            .iter()
            .enumerate()
            .map(|(w, &c)| {
                if w == v {
                    cv
                } else if c >= cv {
                    c + 1
                } else {
                    c
                }
            })
            .collect()
    }

    /// Encodes the graph under a discrete coloring. `lab[p]` is the vertex
    /// index at canonical position `p`.
    fn encode(&self, lab: &[usize]) -> Vec<u8> {
        let mut inv = vec![0u32; self.n()];
        for (p, &i) in lab.iter().enumerate() {
            inv[i] = p as u32;
        }
        let mut out = Vec::with_capacity(64 + 12 * self.closed.len());
        let push_u32 = |out: &mut Vec<u8>, x: u32| out.extend_from_slice(&x.to_le_bytes());
        let push_tab = |out: &mut Vec<u8>, tab: &[Sym]| {
            push_u32(out, tab.len() as u32);
            for s in tab {
                push_u32(out, s.as_str().len() as u32);
                out.extend_from_slice(s.as_str().as_bytes());
            }
        };
        push_u32(&mut out, self.n() as u32);
        push_tab(&mut out, &self.vsym_tab);
        push_tab(&mut out, &self.esym_tab);
        for &i in lab {
            push_u32(&mut out, self.vsym[i]);
        }
        let mut edges: Vec<(u32, u32, u32)> = self
            .closed
            .iter()
            .map(|&(a, b, c)| {
                let (pa, pb) = (inv[a], inv[b]);
                (pa.min(pb), pa.max(pb), c)
            })
            .collect();
        edges.sort_unstable();
        push_u32(&mut out, edges.len() as u32);
        for (a, b, c) in edges {
            push_u32(&mut out, a);
            push_u32(&mut out, b);
            push_u32(&mut out, c);
        }
        let mut halves: Vec<(u32, u32)> = (0..self.n())
            .flat_map(|i| self.half[i].iter().map(move |&c| (i, c)))
            .map(|(i, c)| (inv[i], c))
            .collect();
        halves.sort_unstable();
        push_u32(&mut out, halves.len() as u32);
        for (p, c) in halves {
            push_u32(&mut out, p);
            push_u32(&mut out, c);
        }
        push_u32(&mut out, self.floating.len() as u32);
        for &c in &self.floating {
            push_u32(&mut out, c);
        }
        out
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }

    fn same(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }
}

struct CanonSearch<'a> {
    idx: &'a Indexed,
    best: Option<(Vec<u8>, Vec<usize>)>,
    /// Leaf encodings seen so far, keyed by hash, for automorphism discovery.
    leaves: HashMap<u64, Vec<Vec<usize>>>,
    orbits: UnionFind,
    root_branched: Vec<usize>,
}

impl<'a> CanonSearch<'a> {
    const LEAF_CAP: usize = 4096;

    fn run(idx: &'a Indexed) -> (Vec<u8>, Vec<usize>) {
        let mut colors = idx.initial_colors();
        idx.refine(&mut colors);
        let mut search = CanonSearch {
            idx,
            best: None,
            leaves: HashMap::new(),
            orbits: UnionFind::new(idx.n()),
            root_branched: Vec::new(),
        };
        search.explore(&colors, 0);
        search.best.expect("at least one leaf")
    }

    fn explore(&mut self, colors: &[u32], depth: usize) {
        let n = self.idx.n();
        // Cells keyed by color value; the target is the first cell with
        // at least two members.
        let mut cells: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (i, &c) in colors.iter().enumerate() {
            cells.entry(c).or_default().push(i);
        }
        let target = cells.values().find(|cell| cell.len() > 1).cloned();

        let Some(members) = target else {
            // Discrete: read off the labeling and encode.
            let mut lab = vec![0usize; n];
            for (i, &c) in colors.iter().enumerate() {
                lab[c as usize] = i;
            }
            let enc = self.idx.encode(&lab);
            self.record_leaf(&enc, &lab);
            if self.best.as_ref().map(|(b, _)| enc < *b).unwrap_or(true) {
                self.best = Some((enc, lab));
            }
            return;
        };

        for (k, &v) in members.iter().enumerate() {
            if depth == 0 && k > 0 {
                let skip = self
                    .root_branched
                    .clone()
                    .into_iter()
                    .any(|u| self.orbits.same(u, v));
                if skip {
                    continue;
                }
            }
            let mut child = self.idx.individualize(colors, v);
            self.idx.refine(&mut child);
            self.explore(&child, depth + 1);
            if depth == 0 {
                self.root_branched.push(v);
            }
        }
    }

    fn record_leaf(&mut self, enc: &[u8], lab: &[usize]) {
        let mut hasher = std::collections::hash_map::DefaultHasher::new();
        enc.hash(&mut hasher);
        let key = hasher.finish();
        let prior = self.leaves.get(&key).cloned().unwrap_or_default();
        for old in &prior {
            // Candidate automorphism: vertex at position p in `old` maps
            // to the vertex at position p in `lab`.
            let mut perm = vec![0usize; lab.len()];
            for (p, &i) in old.iter().enumerate() {
                perm[i] = lab[p];
            }
            if self.is_automorphism(&perm) {
                for (i, &j) in perm.iter().enumerate() {
                    self.orbits.union(i, j);
                }
            }
        }
        if self.leaves.len() < Self::LEAF_CAP {
            let entry = self.leaves.entry(key).or_default();
            if entry.len() < 8 {
                entry.push(lab.to_vec());
            }
        }
    }

    fn is_automorphism(&self, perm: &[usize]) -> bool {
        let idx = self.idx;
        for i in 0..idx.n() {
            if idx.vsym[i] != idx.vsym[perm[i]] || idx.half[i] != idx.half[perm[i]] {
                return false;
            }
        }
        let mut orig: Vec<(usize, usize, u32)> = idx.closed.clone();
        let mut mapped: Vec<(usize, usize, u32)> = idx
            .closed
            .iter()
            .map(|&(a, b, c)| {
                let (pa, pb) = (perm[a], perm[b]);
                (pa.min(pb), pa.max(pb), c)
            })
            .collect();
        orig.sort_unstable();
        mapped.sort_unstable();
        orig == mapped
    }
}

/// A stable certificate for `g`: `canonical_form(g) == canonical_form(h)`
/// exactly when `are_isomorphic(g, h)` returns a witness. The empty graph
/// yields the fixed all-zero-counts sentinel.
pub fn canonical_form(g: &LabeledGraph) -> Certificate {
    let idx = Indexed::build(g);
    if idx.n() == 0 {
        return idx.encode(&[]);
    }
    CanonSearch::run(&idx).0
}

/// The vertex order realizing the canonical form. Deterministic; two
/// isomorphic graphs list structurally corresponding vertices at equal
/// positions.
pub fn canonical_order(g: &LabeledGraph) -> Vec<VertexId> {
    let idx = Indexed::build(g);
    if idx.n() == 0 {
        return Vec::new();
    }
    let (_, lab) = CanonSearch::run(&idx);
    lab.into_iter().map(|i| idx.verts[i]).collect()
}

/// Finds a labeled isomorphism from `g` to `h`, or `None`. The witness is
/// deterministic: among all witnesses it has the lexicographically least
/// image sequence when `g`'s vertices are listed in ascending id order.
pub fn are_isomorphic(g: &LabeledGraph, h: &LabeledGraph) -> Option<LabeledIsomorphism> {
    if g.vertex_count() != h.vertex_count() || g.edge_count() != h.edge_count() {
        return None;
    }
    let gi = Indexed::build(g);
    let hi = Indexed::build(h);
    if gi.vsym_tab != hi.vsym_tab || gi.esym_tab != hi.esym_tab || gi.floating != hi.floating {
        return None;
    }

    // Common equitable refinement over the disjoint union; any isomorphism
    // must preserve the resulting colors.
    let union = union_index(&gi, &hi);
    let mut colors = union.initial_colors();
    union.refine(&mut colors);
    let n = gi.n();
    let gcolors = &colors[..n];
    let hcolors = &colors[n..];
    {
        let mut gc = gcolors.to_vec();
        let mut hc = hcolors.to_vec();
        gc.sort_unstable();
        hc.sort_unstable();
        if gc != hc {
            return None;
        }
    }

    // Depth-first search assigning g's vertices in ascending id order to
    // h vertices in ascending id order; the first full assignment is the
    // lexicographically least witness.
    let mut assignment: Vec<Option<usize>> = vec![None; n];
    let mut used = vec![false; n];
    if !extend(&gi, &hi, gcolors, hcolors, &mut assignment, &mut used, 0) {
        return None;
    }

    let vertex_map: BTreeMap<VertexId, VertexId> = assignment
        .iter()
        .enumerate()
        .map(|(i, j)| (gi.verts[i], hi.verts[j.expect("complete")]))
        .collect();
    let edge_map = match_edges(g, h, &vertex_map)?;
    Some(LabeledIsomorphism {
        vertex_map,
        edge_map,
    })
}

fn union_index(gi: &Indexed, hi: &Indexed) -> Indexed {
    let n = gi.n();
    let mut adj = gi.adj.clone();
    adj.extend(hi.adj.iter().map(|row| {
        row.iter()
            .map(|&(c, j)| (c, j + n))
            .collect::<Vec<(u32, usize)>>()
    }));
    let mut half = gi.half.clone();
    half.extend(hi.half.iter().cloned());
    let mut verts = gi.verts.clone();
    verts.extend(hi.verts.iter().copied());
    let mut vsym = gi.vsym.clone();
    vsym.extend(hi.vsym.iter().copied());
    let mut closed = gi.closed.clone();
    closed.extend(hi.closed.iter().map(|&(a, b, c)| (a + n, b + n, c)));
    Indexed {
        verts,
        vsym_tab: gi.vsym_tab.clone(),
        esym_tab: gi.esym_tab.clone(),
        vsym,
        adj,
        half,
        floating: gi.floating.clone(),
        closed,
    }
}

fn extend(
    gi: &Indexed,
    hi: &Indexed,
    gcolors: &[u32],
    hcolors: &[u32],
    assignment: &mut Vec<Option<usize>>,
    used: &mut Vec<bool>,
    i: usize,
) -> bool {
    let n = gi.n();
    if i == n {
        return true;
    }
    'cand: for j in 0..n {
        if used[j] || hcolors[j] != gcolors[i] {
            continue;
        }
        // Adjacency toward already-assigned vertices must match as a
        // multiset of edge symbols per neighbor.
        let mut need: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
        for &(c, k) in &gi.adj[i] {
            if k < i {
                need.entry(k).or_default().push(c);
            }
        }
        let mut have: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
        let inv: BTreeMap<usize, usize> = assignment[..i]
            .iter()
            .enumerate()
            .map(|(k, v)| (v.expect("assigned"), k))
            .collect();
        for &(c, m) in &hi.adj[j] {
            if let Some(&k) = inv.get(&m) {
                have.entry(k).or_default().push(c);
            }
        }
        if need.len() != have.len() {
            continue 'cand;
        }
        for (k, mut syms) in need {
            let Some(mut hsyms) = have.remove(&k) else {
                continue 'cand;
            };
            syms.sort_unstable();
            hsyms.sort_unstable();
            if syms != hsyms {
                continue 'cand;
            }
        }
        assignment[i] = Some(j);
        used[j] = true;
        if extend(gi, hi, gcolors, hcolors, assignment, used, i + 1) {
            return true;
        }
        assignment[i] = None;
        used[j] = false;
    }
    false
}

/// Pairs edges across a verified vertex bijection: within each group of
/// parallel edges (same endpoints, same symbol) edges pair off in
/// ascending id order.
fn match_edges(
    g: &LabeledGraph,
    h: &LabeledGraph,
    vmap: &BTreeMap<VertexId, VertexId>,
) -> Option<BTreeMap<EdgeId, EdgeId>> {
    type Key = (Option<(VertexId, VertexId)>, Option<VertexId>, Sym);
    fn key_of(e: &Edge, map: Option<&BTreeMap<VertexId, VertexId>>) -> Key {
        let m = |v: VertexId| map.map(|t| t[&v]).unwrap_or(v);
        match e.ends {
            (End::Vertex(a), End::Vertex(b)) => {
                let (x, y) = (m(a), m(b));
                (Some((x.min(y), x.max(y))), None, e.sym.clone())
            }
            (End::Vertex(a), End::Free) | (End::Free, End::Vertex(a)) => {
                (None, Some(m(a)), e.sym.clone())
            }
            (End::Free, End::Free) => (None, None, e.sym.clone()),
        }
    }
    let mut gg: BTreeMap<Key, Vec<EdgeId>> = BTreeMap::new();
    for (id, e) in g.edges() {
        gg.entry(key_of(e, Some(vmap))).or_default().push(id);
    }
    let mut hh: BTreeMap<Key, Vec<EdgeId>> = BTreeMap::new();
    for (id, e) in h.edges() {
        hh.entry(key_of(e, None)).or_default().push(id);
    }
    if gg.len() != hh.len() {
        return None;
    }
    let mut out = BTreeMap::new();
    for (key, gids) in gg {
        let hids = hh.remove(&key)?;
        if gids.len() != hids.len() {
            return None;
        }
        for (a, b) in gids.into_iter().zip(hids) {
            out.insert(a, b);
        }
    }
    Some(out)
}

#[cfg(test)]
pub(crate) mod oracle {
    //! Exhaustive bijection search, kept independent of the canonical
    //! form implementation so it can serve as its oracle.

    use super::*;

    /// Tries every symbol-preserving vertex bijection.
    pub fn brute_force_isomorphic(g: &LabeledGraph, h: &LabeledGraph) -> bool {
        if g.vertex_count() != h.vertex_count() || g.edge_count() != h.edge_count() {
            return false;
        }
        let gv: Vec<VertexId> = g.vertex_ids().collect();
        let hv: Vec<VertexId> = h.vertex_ids().collect();

        let mut gfloat: Vec<&Sym> = g
            .edges()
            .filter(|(_, e)| e.ends == (End::Free, End::Free))
            .map(|(_, e)| &e.sym)
            .collect();
        let mut hfloat: Vec<&Sym> = h
            .edges()
            .filter(|(_, e)| e.ends == (End::Free, End::Free))
            .map(|(_, e)| &e.sym)
            .collect();
        gfloat.sort();
        hfloat.sort();
        if gfloat != hfloat {
            return false;
        }

        fn profile(g: &LabeledGraph, map: &BTreeMap<VertexId, VertexId>, h: &LabeledGraph) -> bool {
            // Closed edges and half edges must correspond.
            let mut ge: Vec<(VertexId, VertexId, &Sym)> = Vec::new();
            let mut gh: Vec<(VertexId, &Sym)> = Vec::new();
            for (_, e) in g.edges() {
                match e.ends {
                    (End::Vertex(a), End::Vertex(b)) => {
                        let (x, y) = (map[&a], map[&b]);
                        ge.push((x.min(y), x.max(y), &e.sym));
                    }
                    (End::Vertex(a), End::Free) | (End::Free, End::Vertex(a)) => {
                        gh.push((map[&a], &e.sym));
                    }
                    _ => {}
                }
            }
            let mut he: Vec<(VertexId, VertexId, &Sym)> = Vec::new();
            let mut hh: Vec<(VertexId, &Sym)> = Vec::new();
            for (_, e) in h.edges() {
                match e.ends {
                    (End::Vertex(a), End::Vertex(b)) => he.push((a.min(b), a.max(b), &e.sym)),
                    (End::Vertex(a), End::Free) | (End::Free, End::Vertex(a)) => {
                        hh.push((a, &e.sym));
                    }
                    _ => {}
                }
            }
            ge.sort();
            he.sort();
            gh.sort();
            hh.sort();
            ge == he && gh == hh
        }

        fn rec(
            g: &LabeledGraph,
            h: &LabeledGraph,
            gv: &[VertexId],
            hv: &[VertexId],
            map: &mut BTreeMap<VertexId, VertexId>,
            used: &mut Vec<bool>,
            i: usize,
        ) -> bool {
            if i == gv.len() {
                return profile(g, map, h);
            }
            for (j, &w) in hv.iter().enumerate() {
                if used[j] || g.vertex_sym(gv[i]) != h.vertex_sym(w) {
                    continue;
                }
                map.insert(gv[i], w);
                used[j] = true;
                if rec(g, h, gv, hv, map, used, i + 1) {
                    return true;
                }
                map.remove(&gv[i]);
                used[j] = false;
            }
            false
        }

        let mut map = BTreeMap::new();
        let mut used = vec![false; hv.len()];
        rec(g, h, &gv, &hv, &mut map, &mut used, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sym(s: &str) -> Sym {
        Sym::new(s)
    }

    fn cycle(n: u32, vsym: &str, esym: &str) -> LabeledGraph {
        let mut g = LabeledGraph::new();
        for i in 0..n {
            g.add_vertex(VertexId(i), sym(vsym)).unwrap();
        }
        for i in 0..n {
            g.add_edge(
                EdgeId(i),
                sym(esym),
                End::Vertex(VertexId(i)),
                End::Vertex(VertexId((i + 1) % n)),
            )
            .unwrap();
        }
        g
    }

    fn path(n: u32, vsym: &str, esym: &str) -> LabeledGraph {
        let mut g = LabeledGraph::new();
        for i in 0..n {
            g.add_vertex(VertexId(i), sym(vsym)).unwrap();
        }
        for i in 0..n - 1 {
            g.add_edge(
                EdgeId(i),
                sym(esym),
                End::Vertex(VertexId(i)),
                End::Vertex(VertexId(i + 1)),
            )
            .unwrap();
        }
        g
    }

    #[test]
    fn one_vertex_graphs_are_isomorphic() {
        let mut g = LabeledGraph::new();
        g.add_vertex(VertexId(3), sym("a")).unwrap();
        let mut h = LabeledGraph::new();
        h.add_vertex(VertexId(9), sym("a")).unwrap();
        let w = are_isomorphic(&g, &h).expect("witness");
        assert!(w.verify(&g, &h));
        assert_eq!(w.vertex_map[&VertexId(3)], VertexId(9));
    }

    #[test]
    fn cycle_vs_path_not_isomorphic() {
        let g = cycle(3, "a", "h");
        let mut h = path(3, "a", "h");
        h.add_edge(
            EdgeId(7),
            sym("h"),
            End::Vertex(VertexId(0)),
            End::Vertex(VertexId(1)),
        )
        .unwrap();
        assert_eq!(g.edge_count(), h.edge_count());
        assert!(are_isomorphic(&g, &h).is_none());
        assert_ne!(canonical_form(&g), canonical_form(&h));
    }

    #[test]
    fn empty_graph_certificate_is_the_sentinel() {
        let g = LabeledGraph::new();
        let cert = canonical_form(&g);
        // n = 0, empty symbol tables, zero edge/half/floating counts.
        assert_eq!(cert, vec![0u8; 24]);
    }

    #[test]
    fn open_edge_multisets_distinguish_graphs() {
        let mut g = LabeledGraph::new();
        g.add_edge(EdgeId(0), sym("h"), End::Free, End::Free).unwrap();
        let mut h = LabeledGraph::new();
        h.add_edge(EdgeId(0), sym("k"), End::Free, End::Free).unwrap();
        assert!(are_isomorphic(&g, &h).is_none());
        assert_ne!(canonical_form(&g), canonical_form(&h));
    }

    #[test]
    fn permuted_copy_has_equal_certificate() {
        let g = cycle(6, "a", "h");
        let vmap: BTreeMap<VertexId, VertexId> = (0..6u32)
            .map(|i| (VertexId(i), VertexId((i * 5 + 2) % 6 + 100)))
            .collect();
        let emap: BTreeMap<EdgeId, EdgeId> = (0..6u32)
            .map(|i| (EdgeId(i), EdgeId(50 - i)))
            .collect();
        let h = g.relabel_ids(&vmap, &emap);
        assert_eq!(canonical_form(&g), canonical_form(&h));
        let w = are_isomorphic(&g, &h).expect("witness");
        assert!(w.verify(&g, &h));
    }

    #[test]
    fn witness_is_lexicographically_least() {
        // A 2-cycle of parallel edges has automorphisms; the witness must
        // pick the identity-like least image sequence.
        let mut g = LabeledGraph::new();
        g.add_vertex(VertexId(0), sym("a")).unwrap();
        g.add_vertex(VertexId(1), sym("a")).unwrap();
        g.add_edge(
            EdgeId(0),
            sym("h"),
            End::Vertex(VertexId(0)),
            End::Vertex(VertexId(1)),
        )
        .unwrap();
        let w = are_isomorphic(&g, &g).expect("witness");
        assert_eq!(w.vertex_map[&VertexId(0)], VertexId(0));
        assert_eq!(w.vertex_map[&VertexId(1)], VertexId(1));
    }

    /// Strategy for small random labeled multigraphs with open ends.
    fn small_graph() -> impl Strategy<Value = LabeledGraph> {
        (1usize..=6, proptest::collection::vec((0u8..4, 0u8..4, 0u8..2, 0u8..3), 0..10)).prop_map(
            |(n, edges)| {
                let vsyms = ["a", "b"];
                let esyms = ["h", "k", "m"];
                let mut g = LabeledGraph::new();
                for i in 0..n {
                    g.add_vertex(VertexId(i as u32), sym(vsyms[i % 2])).unwrap();
                }
                let mut eid = 0u32;
                for (a, b, open, es) in edges {
                    let a = (a as usize) % n;
                    let b = (b as usize) % n;
                    let ends = match open {
                        0 if a != b => (End::Vertex(VertexId(a as u32)), End::Vertex(VertexId(b as u32))),
                        1 => (End::Vertex(VertexId(a as u32)), End::Free),
                        _ => (End::Free, End::Free),
                    };
                    if matches!(ends, (End::Vertex(x), End::Vertex(y)) if x == y) {
                        continue;
                    }
                    g.add_edge(EdgeId(eid), sym(esyms[es as usize % 3]), ends.0, ends.1)
                        .unwrap();
                    eid += 1;
                }
                g
            },
        )
    }

    proptest! {
        #[test]
        fn certificate_invariant_under_id_permutation(g in small_graph(), seed in 0u64..1000) {
            let n = g.vertex_count() as u32;
            let m = g.edge_count() as u32;
            // Derive a permutation from the seed.
            let mut vs: Vec<u32> = (0..n).collect();
            let mut es: Vec<u32> = (0..m).collect();
            let mut s = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
            for i in (1..vs.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                vs.swap(i, (s >> 33) as usize % (i + 1));
            }
            for i in (1..es.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                es.swap(i, (s >> 33) as usize % (i + 1));
            }
            let vmap: BTreeMap<VertexId, VertexId> = g.vertex_ids().zip(vs.iter().map(|&i| VertexId(i + 1000))).collect();
            let emap: BTreeMap<EdgeId, EdgeId> = g.edge_ids().zip(es.iter().map(|&i| EdgeId(i + 1000))).collect();
            let h = g.relabel_ids(&vmap, &emap);
            prop_assert_eq!(canonical_form(&g), canonical_form(&h));
            let w = are_isomorphic(&g, &h).expect("permuted copy is isomorphic");
            prop_assert!(w.verify(&g, &h));
        }

        #[test]
        fn agrees_with_brute_force(g in small_graph(), h in small_graph()) {
            let expected = oracle::brute_force_isomorphic(&g, &h);
            let witness = are_isomorphic(&g, &h);
            prop_assert_eq!(witness.is_some(), expected);
            prop_assert_eq!(canonical_form(&g) == canonical_form(&h), expected);
            if let Some(w) = witness {
                prop_assert!(w.verify(&g, &h));
            }
        }
    }
}
