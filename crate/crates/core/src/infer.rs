//! Rule inference: reading a combinatorial subdivision rule off a history
//! graph.
//!
//! A subdivision acts locally, so every same-symbol vertex subdivides the
//! same way and the rule is readable from representatives. Signatures and
//! interiors come from one representative per symbol. Stub indices are
//! propagated edge by edge: teaching one endpoint context of a physical
//! edge fixes the other endpoint's indices through the observed child
//! pairing, which keeps re-expansion consistent with every instance.
//!
//! Child vertices are identified across instances by their canonical
//! position in the slot-decorated fragment (open crossing edges tagged
//! with the slot they lie over), which pins children to slots even when
//! the bare fragment has extra symmetry.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::axioms::{check_axioms, AxiomReport};
use crate::canon::canonical_order;
use crate::graph::{
    fragment_preimage, End, EdgeId, FragmentTarget, LabeledGraph, Sym, VertexId,
};
use crate::history::HistoryGraph;
use crate::rule::{
    slot_assignment, validate_rule, CombRule, EdgeRule, LabelAlphabet, StarSignature, Stub,
    VertexRule,
};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum InferError {
    #[error("history graph violates the axioms:\n{0}")]
    Axioms(AxiomReport),
    #[error("need at least 3 expansion levels, got {0}")]
    TooShallow(usize),
    #[error("symbol {0} occurs only at the top level; its subdivision is unwitnessed")]
    Unwitnessed(Sym),
    #[error("vertex {vertex} at level {level} has parallel incident edges with crossing children; their fibers cannot be attributed")]
    AmbiguousParallel { level: usize, vertex: VertexId },
    #[error("every instance of edge symbol {0} lies in a parallel class; its subdivision cannot be read off")]
    AmbiguousParallelEdge(Sym),
    #[error("inconsistent child pairing over edge {edge} at level {level}; the graph is not generated by a single rule")]
    InconsistentPairing { level: usize, edge: EdgeId },
    #[error("inference bug or malformed input: {0}")]
    Internal(String),
}

/// Per-vertex view of one expansion step.
struct VertexView {
    /// Canonical position of each child vertex, from the slot-decorated
    /// fragment.
    canon_pos: BTreeMap<VertexId, usize>,
    /// Interior edges (id, symbol, endpoints), both endpoints children.
    interior: Vec<(EdgeId, Sym, VertexId, VertexId)>,
    /// Incident level edge -> crossing children on this side, as (child
    /// edge id, child edge symbol, child vertex).
    crossing: BTreeMap<EdgeId, Vec<(EdgeId, Sym, VertexId)>>,
}

fn vertex_view(
    parent: &LabeledGraph,
    child: &LabeledGraph,
    pred: &BTreeMap<VertexId, VertexId>,
    v: VertexId,
    slots: &[EdgeId],
    level: usize,
) -> Result<VertexView, InferError> {
    let mut children: Vec<(VertexId, Sym)> = Vec::new();
    for (x, sym) in child.vertices() {
        if pred[&x] == v {
            children.push((x, sym.clone()));
        }
    }

    let mut interior = Vec::new();
    let mut crossing_by_nbr: BTreeMap<VertexId, Vec<(EdgeId, Sym, VertexId)>> = BTreeMap::new();
    for (id, e) in child.edges() {
        if let (End::Vertex(a), End::Vertex(b)) = e.ends {
            let (pa, pb) = (pred[&a], pred[&b]);
            if pa == v && pb == v {
                interior.push((id, e.sym.clone(), a, b));
            } else if pa == v {
                crossing_by_nbr
                    .entry(pb)
                    .or_default()
                    .push((id, e.sym.clone(), a));
            } else if pb == v {
                crossing_by_nbr
                    .entry(pa)
                    .or_default()
                    .push((id, e.sym.clone(), b));
            }
        }
    }

    // Attribute crossing children to incident edges. With parallel
    // incident edges the vertex predecessor map does not determine the
    // attribution, so only empty fibers are acceptable there.
    let mut incident_by_nbr: BTreeMap<VertexId, Vec<EdgeId>> = BTreeMap::new();
    for id in parent.incident_edges(v) {
        if let Some(End::Vertex(w)) = parent.edge(id).expect("incident").other_end(v) {
            incident_by_nbr.entry(w).or_default().push(id);
        }
    }
    let mut crossing: BTreeMap<EdgeId, Vec<(EdgeId, Sym, VertexId)>> = BTreeMap::new();
    for (nbr, edges) in incident_by_nbr {
        let pool = crossing_by_nbr.remove(&nbr).unwrap_or_default();
        if edges.len() == 1 {
            crossing.insert(edges[0], pool);
        } else if pool.is_empty() {
            for id in edges {
                crossing.insert(id, Vec::new());
            }
        } else {
            return Err(InferError::AmbiguousParallel { level, vertex: v });
        }
    }

    // Slot-decorated fragment: open crossing edges carry (symbol, slot).
    let mut frag = LabeledGraph::new();
    for (x, sym) in &children {
        frag.add_vertex(*x, sym.clone())
            .map_err(|e| InferError::Internal(e.to_string()))?;
    }
    for (id, sym, a, b) in &interior {
        frag.add_edge(*id, sym.clone(), End::Vertex(*a), End::Vertex(*b))
            .map_err(|e| InferError::Internal(e.to_string()))?;
    }
    for (slot, eid) in slots.iter().enumerate() {
        if let Some(pool) = crossing.get(eid) {
            for (cid, csym, cv) in pool {
                let tagged = Sym::new(&format!("{csym}\u{1}{slot}"));
                frag.add_edge(*cid, tagged, End::Vertex(*cv), End::Free)
                    .map_err(|e| InferError::Internal(e.to_string()))?;
            }
        }
    }
    let order = canonical_order(&frag);
    let canon_pos: BTreeMap<VertexId, usize> =
        order.iter().enumerate().map(|(i, x)| (*x, i)).collect();

    Ok(VertexView {
        canon_pos,
        interior,
        crossing,
    })
}

/// Reads the rule off an axiom-passing history graph with at least three
/// expansion levels. The seed is level 1; `build_history` of the result
/// reproduces the levels up to labeled isomorphism.
pub fn infer_rule(h: &HistoryGraph) -> Result<CombRule, InferError> {
    let report = check_axioms(h);
    if !report.is_pass() {
        return Err(InferError::Axioms(report));
    }
    if h.depth() < 3 {
        return Err(InferError::TooShallow(h.depth()));
    }
    let top = h.depth();
    let pred_maps: Vec<BTreeMap<VertexId, VertexId>> = (0..top)
        .map(|n| h.pred_map(n).expect("axioms passed"))
        .collect();

    // Alphabet from levels 1..; every symbol must be witnessed below the
    // top so its subdivision is visible.
    let mut vertex_syms = BTreeSet::new();
    let mut edge_syms = BTreeSet::new();
    let mut witnessed_v = BTreeSet::new();
    let mut witnessed_e = BTreeSet::new();
    for (n, level) in h.levels.iter().enumerate().skip(1) {
        for (_, sym) in level.vertices() {
            vertex_syms.insert(sym.clone());
            if n < top {
                witnessed_v.insert(sym.clone());
            }
        }
        for (_, e) in level.edges() {
            edge_syms.insert(e.sym.clone());
            if n < top {
                witnessed_e.insert(e.sym.clone());
            }
        }
    }
    for sym in &vertex_syms {
        if !witnessed_v.contains(sym) {
            return Err(InferError::Unwitnessed(sym.clone()));
        }
    }
    for sym in &edge_syms {
        if !witnessed_e.contains(sym) {
            return Err(InferError::Unwitnessed(sym.clone()));
        }
    }

    // Signatures: sorted incident symbol multiset of any representative.
    let mut signatures: BTreeMap<Sym, StarSignature> = BTreeMap::new();
    for level in h.levels.iter().skip(1) {
        for (v, sym) in level.vertices() {
            signatures.entry(sym.clone()).or_insert_with(|| {
                let mut syms: Vec<Sym> = level
                    .incident_edges(v)
                    .iter()
                    .map(|e| level.edge(*e).expect("incident").sym.clone())
                    .collect();
                syms.sort();
                StarSignature(syms)
            });
        }
    }

    // Edge rules from a representative instance without parallel
    // duplicates; children sorted by symbol.
    let mut edge_rules: BTreeMap<Sym, EdgeRule> = BTreeMap::new();
    for n in 1..top {
        let (parent, child) = (&h.levels[n], &h.levels[n + 1]);
        let mut pair_count: BTreeMap<(VertexId, VertexId), usize> = BTreeMap::new();
        for (_, e) in parent.edges() {
            let vs: Vec<VertexId> = e.attached().collect();
            if vs.len() == 2 {
                *pair_count.entry((vs[0].min(vs[1]), vs[0].max(vs[1]))).or_insert(0) += 1;
            }
        }
        for (eid, e) in parent.edges() {
            if edge_rules.contains_key(&e.sym) {
                continue;
            }
            let vs: Vec<VertexId> = e.attached().collect();
            if vs.len() != 2 || pair_count[&(vs[0].min(vs[1]), vs[0].max(vs[1]))] > 1 {
                continue;
            }
            let frag = fragment_preimage(parent, child, &pred_maps[n], FragmentTarget::Edge(eid))
                .map_err(|err| InferError::Internal(err.to_string()))?;
            let mut children: Vec<Sym> = frag.edges().map(|(_, e)| e.sym.clone()).collect();
            children.sort();
            edge_rules.insert(e.sym.clone(), EdgeRule(children));
        }
    }
    for sym in &edge_syms {
        if !edge_rules.contains_key(sym) {
            return Err(InferError::AmbiguousParallelEdge(sym.clone()));
        }
    }

    // Slot assignments per level vertex.
    let mut slots_per_level: Vec<BTreeMap<VertexId, Vec<EdgeId>>> = vec![BTreeMap::new()];
    for n in 1..=top {
        let level = &h.levels[n];
        let mut slots = BTreeMap::new();
        for (v, sym) in level.vertices() {
            let assignment = slot_assignment(level, v, &signatures[sym])
                .map_err(|e| InferError::Internal(e.to_string()))?;
            slots.insert(v, assignment);
        }
        slots_per_level.push(slots);
    }

    // Representative view + interior per vertex symbol, children ordered
    // by canonical position.
    struct Rep {
        /// interior local id per representative child vertex
        local: BTreeMap<VertexId, VertexId>,
        /// representative child vertex per canonical position
        by_pos: Vec<VertexId>,
    }
    let mut reps: BTreeMap<Sym, Rep> = BTreeMap::new();
    let mut vertex_rules: BTreeMap<Sym, VertexRule> = BTreeMap::new();
    for n in 1..top {
        let (parent, child) = (&h.levels[n], &h.levels[n + 1]);
        for (v, sym) in parent.vertices() {
            if reps.contains_key(sym) {
                continue;
            }
            let view = vertex_view(parent, child, &pred_maps[n], v, &slots_per_level[n][&v], n)?;
            let mut by_pos: Vec<VertexId> = vec![VertexId(0); view.canon_pos.len()];
            for (x, p) in &view.canon_pos {
                by_pos[*p] = *x;
            }
            let mut interior = LabeledGraph::new();
            let mut local = BTreeMap::new();
            for (i, x) in by_pos.iter().enumerate() {
                let id = VertexId(i as u32);
                interior
                    .add_vertex(id, child.vertex_sym(*x).expect("child").clone())
                    .map_err(|e| InferError::Internal(e.to_string()))?;
                local.insert(*x, id);
            }
            let mut iedges = view.interior.clone();
            iedges.sort_by_key(|(id, _, _, _)| *id);
            for (i, (_, esym, a, b)) in iedges.iter().enumerate() {
                interior
                    .add_edge(
                        EdgeId(i as u32),
                        esym.clone(),
                        End::Vertex(local[a]),
                        End::Vertex(local[b]),
                    )
                    .map_err(|e| InferError::Internal(e.to_string()))?;
            }
            vertex_rules.insert(
                sym.clone(),
                VertexRule {
                    interior,
                    stubs: Vec::new(),
                },
            );
            reps.insert(sym.clone(), Rep { local, by_pos });
        }
    }

    // Stub tables taught context by context. taught[(sym, slot)][j] is
    // the interior-local child carrying child edge j of that slot.
    type Context = (Sym, usize);
    let mut taught: BTreeMap<Context, Vec<VertexId>> = BTreeMap::new();
    let mut views: BTreeMap<(usize, VertexId), VertexView> = BTreeMap::new();

    for n in 1..top {
        let parent = &h.levels[n];
        let child = &h.levels[n + 1];
        for (eid, edge) in parent.edges() {
            let (u, w) = match edge.ends {
                (End::Vertex(u), End::Vertex(w)) => (u, w),
                _ => continue,
            };
            let usym = parent.vertex_sym(u).expect("vertex").clone();
            let wsym = parent.vertex_sym(w).expect("vertex").clone();
            let slot_u = slots_per_level[n][&u]
                .iter()
                .position(|x| *x == eid)
                .expect("assigned");
            let slot_w = slots_per_level[n][&w]
                .iter()
                .position(|x| *x == eid)
                .expect("assigned");
            let cu: Context = (usym.clone(), slot_u);
            let cw: Context = (wsym.clone(), slot_w);
            if taught.contains_key(&cu) && taught.contains_key(&cw) {
                continue;
            }

            for &(lv, x) in [(n, u), (n, w)].iter() {
                if !views.contains_key(&(lv, x)) {
                    let view =
                        vertex_view(parent, child, &pred_maps[n], x, &slots_per_level[n][&x], n)?;
                    views.insert((lv, x), view);
                }
            }

            // Crossing pairs over this edge: (u-side child, w-side child),
            // looked up through the u side's attribution.
            let mut pairs: Vec<(EdgeId, VertexId, VertexId)> = Vec::new();
            {
                let uview = &views[&(n, u)];
                let empty = Vec::new();
                for (cid, _, cv) in uview.crossing.get(&eid).unwrap_or(&empty) {
                    let ce = child.edge(*cid).expect("child edge");
                    let other = ce
                        .attached()
                        .find(|x| *x != *cv)
                        .ok_or_else(|| InferError::Internal("crossing edge lost an end".into()))?;
                    pairs.push((*cid, *cv, other));
                }
            }

            // Identify an instance child with an interior-local child via
            // its canonical fragment position.
            let localize = |at_vertex: VertexId, child_v: VertexId, sym: &Sym| -> VertexId {
                let view = &views[&(n, at_vertex)];
                let rep = &reps[sym];
                let pos = view.canon_pos[&child_v];
                rep.local[&rep.by_pos[pos]]
            };

            match (taught.contains_key(&cu), taught.contains_key(&cw)) {
                (false, false) => {
                    // Teach the u side canonically (by canonical position of
                    // the attach child, symbol-major); derive the w side.
                    let mut order: Vec<(Sym, usize, usize)> = pairs
                        .iter()
                        .enumerate()
                        .map(|(i, (cid, cv, _))| {
                            let csym = child.edge(*cid).expect("edge").sym.clone();
                            (csym, views[&(n, u)].canon_pos[cv], i)
                        })
                        .collect();
                    order.sort();
                    let mut u_children = Vec::new();
                    let mut w_children = Vec::new();
                    for (_, _, i) in &order {
                        let (_, cv, other) = pairs[*i];
                        u_children.push(localize(u, cv, &usym));
                        w_children.push(localize(w, other, &wsym));
                    }
                    taught.insert(cu.clone(), u_children);
                    taught.entry(cw).or_insert(w_children);
                }
                (true, false) => {
                    let table = taught[&cu].clone();
                    let mut w_children: Vec<Option<VertexId>> = vec![None; pairs.len()];
                    for (cid, cv, other) in &pairs {
                        let lu = localize(u, *cv, &usym);
                        let j = table.iter().enumerate().position(|(k, x)| {
                            *x == lu && w_children.get(k).map(|s| s.is_none()).unwrap_or(false)
                        });
                        match j {
                            Some(k) => w_children[k] = Some(localize(w, *other, &wsym)),
                            None => {
                                return Err(InferError::InconsistentPairing {
                                    level: n,
                                    edge: *cid,
                                })
                            }
                        }
                    }
                    let filled: Option<Vec<VertexId>> = w_children.into_iter().collect();
                    match filled {
                        Some(t) => {
                            taught.insert(cw, t);
                        }
                        None => return Err(InferError::InconsistentPairing { level: n, edge: eid }),
                    }
                }
                (false, true) => {
                    let table = taught[&cw].clone();
                    let mut u_children: Vec<Option<VertexId>> = vec![None; pairs.len()];
                    for (cid, cv, other) in &pairs {
                        let lw = localize(w, *other, &wsym);
                        let j = table.iter().enumerate().position(|(k, x)| {
                            *x == lw && u_children.get(k).map(|s| s.is_none()).unwrap_or(false)
                        });
                        match j {
                            Some(k) => u_children[k] = Some(localize(u, *cv, &usym)),
                            None => {
                                return Err(InferError::InconsistentPairing {
                                    level: n,
                                    edge: *cid,
                                })
                            }
                        }
                    }
                    let filled: Option<Vec<VertexId>> = u_children.into_iter().collect();
                    match filled {
                        Some(t) => {
                            taught.insert(cu, t);
                        }
                        None => return Err(InferError::InconsistentPairing { level: n, edge: eid }),
                    }
                }
                (true, true) => unreachable!("filtered above"),
            }
        }
    }

    // Assemble stubs. Indices within a slot follow the taught order,
    // which is symbol-major, matching the sorted edge-rule child lists.
    for (sym, vr) in vertex_rules.iter_mut() {
        let sig = &signatures[sym];
        let mut stubs = Vec::new();
        for slot in 0..sig.len() {
            let ctx: Context = (sym.clone(), slot);
            let table = taught.get(&ctx).ok_or_else(|| {
                InferError::Internal(format!("context ({sym}, {slot}) never observed"))
            })?;
            for (j, child) in table.iter().enumerate() {
                stubs.push(Stub {
                    child: *child,
                    slot,
                    index: j,
                });
            }
        }
        vr.stubs = stubs;
    }

    let rule = CombRule {
        alphabet: LabelAlphabet {
            vertex_syms,
            edge_syms,
            origin: h.origin_sym.clone(),
        },
        signatures,
        vertex_rules,
        edge_rules,
        seed: h.levels[1].clone(),
    };
    let report = validate_rule(&rule);
    if !report.is_pass() {
        return Err(InferError::Internal(report.to_string()));
    }
    Ok(rule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canon::canonical_form;
    use crate::gallery;
    use crate::history::build_history;

    fn round_trip_levels(rule: &CombRule, depth: usize) {
        let h = build_history(rule, depth).unwrap();
        let inferred = infer_rule(&h).unwrap();
        let h2 = build_history(&inferred, depth).unwrap();
        assert_eq!(h.level_sizes(), h2.level_sizes());
        for n in 0..=depth {
            assert_eq!(
                canonical_form(&h.levels[n]),
                canonical_form(&h2.levels[n]),
                "level {n} differs"
            );
        }
    }

    #[test]
    fn cycdb_round_trips() {
        round_trip_levels(&gallery::cycdb(), 5);
    }

    #[test]
    fn ident_round_trips() {
        round_trip_levels(&gallery::ident(), 4);
    }

    #[test]
    fn too_shallow_is_rejected() {
        let h = build_history(&gallery::cycdb(), 2).unwrap();
        assert!(matches!(infer_rule(&h), Err(InferError::TooShallow(2))));
    }

    #[test]
    fn axiom_failures_carry_the_report() {
        let mut h = build_history(&gallery::cycdb(), 3).unwrap();
        let extra = (h.levels[2].vertex_ids().next().unwrap(), VertexId(0));
        h.preds[1].push(extra);
        match infer_rule(&h) {
            Err(InferError::Axioms(report)) => {
                assert!(report.violated_conditions().contains(&3));
            }
            other => panic!("expected axiom failure, got {other:?}"),
        }
    }

    #[test]
    fn quad_on_torus_history_re_expands() {
        let h = crate::planar::history_graph_2d(&gallery::tor9(), &gallery::quad(), 3).unwrap();
        let inferred = infer_rule(&h).unwrap();
        let h2 = build_history(&inferred, 3).unwrap();
        assert_eq!(h2.level_sizes(), vec![1, 9, 36, 144]);
        for n in 0..=3 {
            assert_eq!(
                canonical_form(&h.levels[n]),
                canonical_form(&h2.levels[n]),
                "level {n} differs"
            );
        }
    }

    #[test]
    fn barydual_re_expands_with_branching_six() {
        let rule = gallery::barydual();
        let h = build_history(&rule, 3).unwrap();
        assert_eq!(h.level_sizes(), vec![1, 4, 24, 144]);
    }
}
