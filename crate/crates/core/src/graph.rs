//! Finite labeled multigraphs with open-edge support.
//!
//! Graphs here are the common currency of the whole crate: rule seeds,
//! history-graph levels, open stars, and subdivision fragments are all
//! values of [`LabeledGraph`]. Edges may leave one or both ends unattached
//! (the [`End::Free`] sentinel), which makes unions of open edges
//! first-class values instead of a special case. Parallel edges are
//! permitted; self-loops are not.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// An interned-style label symbol. Cloning is cheap (shared string).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Sym(Arc<str>);

impl Sym {
    pub fn new(s: &str) -> Self {
        Sym(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Sym {
    fn from(s: &str) -> Self {
        Sym::new(s)
    }
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct VertexId(pub u32);

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct EdgeId(pub u32);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One end of an edge: attached to a vertex, or open.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum End {
    Vertex(VertexId),
    Free,
}

impl End {
    pub fn vertex(self) -> Option<VertexId> {
        match self {
            End::Vertex(v) => Some(v),
            End::Free => None,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Edge {
    pub sym: Sym,
    pub ends: (End, End),
}

impl Edge {
    /// Vertices this edge is attached to (0, 1 or 2 entries).
    pub fn attached(&self) -> impl Iterator<Item = VertexId> {
        [self.ends.0.vertex(), self.ends.1.vertex()]
            .into_iter()
            .flatten()
    }

    /// The other attached end, if `v` is one of the ends.
    pub fn other_end(&self, v: VertexId) -> Option<End> {
        match self.ends {
            (End::Vertex(a), b) if a == v => Some(b),
            (a, End::Vertex(b)) if b == v => Some(a),
            _ => None,
        }
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("duplicate vertex id {0}")]
    DuplicateVertex(VertexId),
    #[error("duplicate edge id {0}")]
    DuplicateEdge(EdgeId),
    #[error("edge {0} references unknown vertex {1}")]
    MissingEndpoint(EdgeId, VertexId),
    #[error("edge {0} is a self-loop at vertex {1}")]
    SelfLoop(EdgeId, VertexId),
    #[error("unknown vertex id {0}")]
    UnknownVertex(VertexId),
    #[error("unknown edge id {0}")]
    UnknownEdge(EdgeId),
    #[error("predecessor map is not total: child vertex {0} has no image")]
    PredNotTotal(VertexId),
    #[error("child edge {0} violates the morphism condition: endpoint images {1} and {2} are neither equal nor adjacent")]
    Morphism(EdgeId, VertexId, VertexId),
    #[error("not a star graph: {0}")]
    NotAStar(String),
}

/// A finite multigraph with vertex and edge labels and optional open
/// edge ends. Immutable once built (all operations return new values).
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct LabeledGraph {
    vertices: BTreeMap<VertexId, Sym>,
    edges: BTreeMap<EdgeId, Edge>,
}

impl LabeledGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, id: VertexId, sym: Sym) -> Result<(), GraphError> {
        if self.vertices.contains_key(&id) {
            return Err(GraphError::DuplicateVertex(id));
        }
        self.vertices.insert(id, sym);
        Ok(())
    }

    pub fn add_edge(&mut self, id: EdgeId, sym: Sym, a: End, b: End) -> Result<(), GraphError> {
        if self.edges.contains_key(&id) {
            return Err(GraphError::DuplicateEdge(id));
        }
        if let (End::Vertex(x), End::Vertex(y)) = (a, b) {
            if x == y {
                return Err(GraphError::SelfLoop(id, x));
            }
        }
        for end in [a, b] {
            if let End::Vertex(v) = end {
                if !self.vertices.contains_key(&v) {
                    return Err(GraphError::MissingEndpoint(id, v));
                }
            }
        }
        self.edges.insert(id, Edge { sym, ends: (a, b) });
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty() && self.edges.is_empty()
    }

    pub fn has_vertex(&self, v: VertexId) -> bool {
        self.vertices.contains_key(&v)
    }

    pub fn vertex_sym(&self, v: VertexId) -> Option<&Sym> {
        self.vertices.get(&v)
    }

    pub fn edge(&self, e: EdgeId) -> Option<&Edge> {
        self.edges.get(&e)
    }

    /// Vertices in ascending id order.
    pub fn vertices(&self) -> impl Iterator<Item = (VertexId, &Sym)> {
        self.vertices.iter().map(|(id, sym)| (*id, sym))
    }

    /// Edges in ascending id order.
    pub fn edges(&self) -> impl Iterator<Item = (EdgeId, &Edge)> {
        self.edges.iter().map(|(id, e)| (*id, e))
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices.keys().copied()
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.edges.keys().copied()
    }

    /// Incident edges of `v` in ascending edge id order. An edge appears
    /// once per end attached to `v`; with self-loops excluded that is at
    /// most once.
    pub fn incident_edges(&self, v: VertexId) -> Vec<EdgeId> {
        self.edges
            .iter()
            .filter(|(_, e)| e.attached().any(|w| w == v))
            .map(|(id, _)| *id)
            .collect()
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.incident_edges(v).len()
    }

    /// Adjacency index: vertex -> incident edge ids (ascending).
    pub fn adjacency(&self) -> BTreeMap<VertexId, Vec<EdgeId>> {
        let mut adj: BTreeMap<VertexId, Vec<EdgeId>> =
            self.vertices.keys().map(|v| (*v, Vec::new())).collect();
        for (id, e) in &self.edges {
            for v in e.attached() {
                adj.get_mut(&v).expect("endpoint exists").push(*id);
            }
        }
        adj
    }

    /// Renames vertex and edge ids through the given bijections.
    /// Ids absent from a map are kept.
    pub fn relabel_ids(
        &self,
        vmap: &BTreeMap<VertexId, VertexId>,
        emap: &BTreeMap<EdgeId, EdgeId>,
    ) -> LabeledGraph {
        let map_end = |end: End| match end {
            End::Vertex(v) => End::Vertex(*vmap.get(&v).unwrap_or(&v)),
            End::Free => End::Free,
        };
        let mut g = LabeledGraph::new();
        for (v, sym) in &self.vertices {
            let nv = *vmap.get(v).unwrap_or(v);
            g.vertices.insert(nv, sym.clone());
        }
        for (e, edge) in &self.edges {
            let ne = *emap.get(e).unwrap_or(e);
            g.edges.insert(
                ne,
                Edge {
                    sym: edge.sym.clone(),
                    ends: (map_end(edge.ends.0), map_end(edge.ends.1)),
                },
            );
        }
        g
    }

    /// Replaces every vertex/edge symbol through the given tables.
    /// Symbols absent from a table are kept.
    pub fn relabel_syms(
        &self,
        vsyms: &BTreeMap<VertexId, Sym>,
        esyms: &BTreeMap<EdgeId, Sym>,
    ) -> LabeledGraph {
        let mut g = self.clone();
        for (v, sym) in vsyms {
            if let Some(slot) = g.vertices.get_mut(v) {
                *slot = sym.clone();
            }
        }
        for (e, sym) in esyms {
            if let Some(edge) = g.edges.get_mut(e) {
                edge.sym = sym.clone();
            }
        }
        g
    }
}

/// An open star: one center vertex plus its incident open edges, each
/// with the far end free.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct StarGraph {
    graph: LabeledGraph,
    center: VertexId,
}

impl StarGraph {
    /// Validates the star shape: exactly one vertex, every edge attached
    /// to it exactly once with the other end free.
    pub fn new(graph: LabeledGraph, center: VertexId) -> Result<Self, GraphError> {
        if graph.vertex_count() != 1 || !graph.has_vertex(center) {
            return Err(GraphError::NotAStar(format!(
                "expected a single vertex {center}, found {} vertices",
                graph.vertex_count()
            )));
        }
        for (id, e) in graph.edges() {
            let ok = matches!(
                e.ends,
                (End::Vertex(v), End::Free) | (End::Free, End::Vertex(v)) if v == center
            );
            if !ok {
                return Err(GraphError::NotAStar(format!(
                    "edge {id} is not an open edge at the center"
                )));
            }
        }
        Ok(StarGraph { graph, center })
    }

    pub fn graph(&self) -> &LabeledGraph {
        &self.graph
    }

    pub fn center(&self) -> VertexId {
        self.center
    }

    pub fn center_sym(&self) -> &Sym {
        self.graph.vertex_sym(self.center).expect("center exists")
    }

    pub fn degree(&self) -> usize {
        self.graph.edge_count()
    }

    /// Edge symbols of the star, sorted ascending.
    pub fn edge_syms(&self) -> Vec<Sym> {
        let mut syms: Vec<Sym> = self.graph.edges().map(|(_, e)| e.sym.clone()).collect();
        syms.sort();
        syms
    }
}

/// The open star of `v` in `g`: `v` together with one open copy of every
/// incident edge, the far end replaced by [`End::Free`].
pub fn open_star(g: &LabeledGraph, v: VertexId) -> Result<StarGraph, GraphError> {
    let sym = g
        .vertex_sym(v)
        .cloned()
        .ok_or(GraphError::UnknownVertex(v))?;
    let mut star = LabeledGraph::new();
    star.add_vertex(v, sym)?;
    for id in g.incident_edges(v) {
        let e = g.edge(id).expect("incident edge exists");
        star.add_edge(id, e.sym.clone(), End::Vertex(v), End::Free)?;
    }
    StarGraph::new(star, v)
}

/// Which part of the parent a fragment is pulled back over.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FragmentTarget {
    Vertex(VertexId),
    Edge(EdgeId),
}

/// The preimage of a parent vertex star or parent edge under the
/// predecessor map `pred : child vertices -> parent vertices`.
///
/// For a vertex target `u`: all child vertices over `u`, all child edges
/// with both endpoints over `u`, and an open copy of every child edge
/// with exactly one endpoint over `u` (far end freed).
///
/// For an edge target `{u, w}`: the child edges with one endpoint over
/// `u` and the other over `w`, both ends freed — a union of open edges.
pub fn fragment_preimage(
    parent: &LabeledGraph,
    child: &LabeledGraph,
    pred: &BTreeMap<VertexId, VertexId>,
    target: FragmentTarget,
) -> Result<LabeledGraph, GraphError> {
    // Totality and the graph-morphism condition.
    for v in child.vertex_ids() {
        let p = pred.get(&v).ok_or(GraphError::PredNotTotal(v))?;
        if !parent.has_vertex(*p) {
            return Err(GraphError::UnknownVertex(*p));
        }
    }
    let mut parent_pairs: std::collections::BTreeSet<(VertexId, VertexId)> =
        std::collections::BTreeSet::new();
    for (_, e) in parent.edges() {
        let vs: Vec<VertexId> = e.attached().collect();
        if vs.len() == 2 {
            parent_pairs.insert((vs[0].min(vs[1]), vs[0].max(vs[1])));
        }
    }
    for (id, e) in child.edges() {
        if let (End::Vertex(a), End::Vertex(b)) = e.ends {
            let (pa, pb) = (pred[&a], pred[&b]);
            if pa != pb && !parent_pairs.contains(&(pa.min(pb), pa.max(pb))) {
                return Err(GraphError::Morphism(id, pa, pb));
            }
        }
    }

    let mut frag = LabeledGraph::new();
    match target {
        FragmentTarget::Vertex(u) => {
            if !parent.has_vertex(u) {
                return Err(GraphError::UnknownVertex(u));
            }
            for (v, sym) in child.vertices() {
                if pred[&v] == u {
                    frag.add_vertex(v, sym.clone())?;
                }
            }
            for (id, e) in child.edges() {
                let over: Vec<bool> = [e.ends.0, e.ends.1]
                    .iter()
                    .map(|end| matches!(end, End::Vertex(v) if pred[v] == u))
                    .collect();
                match (over[0], over[1]) {
                    (true, true) => frag.add_edge(id, e.sym.clone(), e.ends.0, e.ends.1)?,
                    (true, false) => frag.add_edge(id, e.sym.clone(), e.ends.0, End::Free)?,
                    (false, true) => frag.add_edge(id, e.sym.clone(), End::Free, e.ends.1)?,
                    (false, false) => {}
                }
            }
        }
        FragmentTarget::Edge(pe) => {
            let edge = parent.edge(pe).ok_or(GraphError::UnknownEdge(pe))?;
            let (u, w) = match edge.ends {
                (End::Vertex(u), End::Vertex(w)) => (u, w),
                // An open parent edge has no vertex fiber underneath it.
                _ => return Ok(frag),
            };
            for (id, e) in child.edges() {
                if let (End::Vertex(a), End::Vertex(b)) = e.ends {
                    let (pa, pb) = (pred[&a], pred[&b]);
                    if (pa == u && pb == w) || (pa == w && pb == u) {
                        frag.add_edge(id, e.sym.clone(), End::Free, End::Free)?;
                    }
                }
            }
        }
    }
    Ok(frag)
}

/// A label- and incidence-preserving bijection between two graphs.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LabeledIsomorphism {
    pub vertex_map: BTreeMap<VertexId, VertexId>,
    pub edge_map: BTreeMap<EdgeId, EdgeId>,
}

impl LabeledIsomorphism {
    /// Checks that the maps really are a labeled isomorphism from `g` to `h`.
    pub fn verify(&self, g: &LabeledGraph, h: &LabeledGraph) -> bool {
        if self.vertex_map.len() != g.vertex_count() || g.vertex_count() != h.vertex_count() {
            return false;
        }
        if self.edge_map.len() != g.edge_count() || g.edge_count() != h.edge_count() {
            return false;
        }
        let mut seen_v = std::collections::BTreeSet::new();
        for (v, w) in &self.vertex_map {
            if g.vertex_sym(*v) != h.vertex_sym(*w) || !seen_v.insert(*w) {
                return false;
            }
        }
        let mut seen_e = std::collections::BTreeSet::new();
        for (e, f) in &self.edge_map {
            let (Some(ge), Some(he)) = (g.edge(*e), h.edge(*f)) else {
                return false;
            };
            if ge.sym != he.sym || !seen_e.insert(*f) {
                return false;
            }
            let map_end = |end: End| match end {
                End::Vertex(v) => self.vertex_map.get(&v).copied().map(End::Vertex),
                End::Free => Some(End::Free),
            };
            let (Some(a), Some(b)) = (map_end(ge.ends.0), map_end(ge.ends.1)) else {
                return false;
            };
            if (a, b) != he.ends && (b, a) != he.ends {
                return false;
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(s: &str) -> Sym {
        Sym::new(s)
    }

    fn v(i: u32) -> VertexId {
        VertexId(i)
    }

    fn e(i: u32) -> EdgeId {
        EdgeId(i)
    }

    #[test]
    fn rejects_self_loops_and_duplicates() {
        let mut g = LabeledGraph::new();
        g.add_vertex(v(0), sym("a")).unwrap();
        assert_eq!(
            g.add_vertex(v(0), sym("b")),
            Err(GraphError::DuplicateVertex(v(0)))
        );
        assert_eq!(
            g.add_edge(e(0), sym("h"), End::Vertex(v(0)), End::Vertex(v(0))),
            Err(GraphError::SelfLoop(e(0), v(0)))
        );
        assert_eq!(
            g.add_edge(e(0), sym("h"), End::Vertex(v(0)), End::Vertex(v(1))),
            Err(GraphError::MissingEndpoint(e(0), v(1)))
        );
    }

    #[test]
    fn union_of_open_edges_is_legal() {
        let mut g = LabeledGraph::new();
        g.add_edge(e(0), sym("h"), End::Free, End::Free).unwrap();
        g.add_edge(e(1), sym("k"), End::Free, End::Free).unwrap();
        assert_eq!(g.vertex_count(), 0);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn parallel_edges_are_kept() {
        let mut g = LabeledGraph::new();
        g.add_vertex(v(0), sym("a")).unwrap();
        g.add_vertex(v(1), sym("a")).unwrap();
        g.add_edge(e(0), sym("h"), End::Vertex(v(0)), End::Vertex(v(1)))
            .unwrap();
        g.add_edge(e(1), sym("h"), End::Vertex(v(0)), End::Vertex(v(1)))
            .unwrap();
        assert_eq!(g.degree(v(0)), 2);
    }

    #[test]
    fn open_star_of_isolated_vertex_is_bare() {
        let mut g = LabeledGraph::new();
        g.add_vertex(v(7), sym("a")).unwrap();
        let star = open_star(&g, v(7)).unwrap();
        assert_eq!(star.degree(), 0);
        assert_eq!(star.center_sym(), &sym("a"));
    }

    #[test]
    fn open_star_collects_incident_symbols() {
        let mut g = LabeledGraph::new();
        for i in 0..4 {
            g.add_vertex(v(i), sym("a")).unwrap();
        }
        g.add_edge(e(0), sym("h"), End::Vertex(v(0)), End::Vertex(v(1)))
            .unwrap();
        g.add_edge(e(1), sym("h"), End::Vertex(v(0)), End::Vertex(v(2)))
            .unwrap();
        g.add_edge(e(2), sym("k"), End::Vertex(v(3)), End::Vertex(v(0)))
            .unwrap();
        let star = open_star(&g, v(0)).unwrap();
        assert_eq!(star.degree(), 3);
        assert_eq!(star.edge_syms(), vec![sym("h"), sym("h"), sym("k")]);
        assert!(open_star(&g, v(9)).is_err());
    }

    #[test]
    fn identity_fragment_is_the_open_star() {
        let mut g = LabeledGraph::new();
        for i in 0..3 {
            g.add_vertex(v(i), sym("a")).unwrap();
        }
        g.add_edge(e(0), sym("h"), End::Vertex(v(0)), End::Vertex(v(1)))
            .unwrap();
        g.add_edge(e(1), sym("h"), End::Vertex(v(1)), End::Vertex(v(2)))
            .unwrap();
        let pred: BTreeMap<_, _> = g.vertex_ids().map(|x| (x, x)).collect();
        let frag = fragment_preimage(&g, &g, &pred, FragmentTarget::Vertex(v(1))).unwrap();
        assert_eq!(frag.vertex_count(), 1);
        assert_eq!(frag.edge_count(), 2);
        for (_, edge) in frag.edges() {
            assert!(matches!(edge.ends, (End::Vertex(x), End::Free) if x == v(1)));
        }
    }

    #[test]
    fn morphism_violation_names_the_edge() {
        let mut parent = LabeledGraph::new();
        parent.add_vertex(v(0), sym("a")).unwrap();
        parent.add_vertex(v(1), sym("a")).unwrap();
        // No edge between the parents.
        let mut child = LabeledGraph::new();
        child.add_vertex(v(0), sym("a")).unwrap();
        child.add_vertex(v(1), sym("a")).unwrap();
        child
            .add_edge(e(5), sym("h"), End::Vertex(v(0)), End::Vertex(v(1)))
            .unwrap();
        let pred: BTreeMap<_, _> = [(v(0), v(0)), (v(1), v(1))].into();
        let err =
            fragment_preimage(&parent, &child, &pred, FragmentTarget::Vertex(v(0))).unwrap_err();
        assert_eq!(err, GraphError::Morphism(e(5), v(0), v(1)));
    }
}
