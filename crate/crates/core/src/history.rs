//! History graphs and level expansion.
//!
//! A history graph holds an origin level, a list of per-level horizontal
//! graphs, and predecessor pairs between consecutive levels. Expansion of
//! one level replaces every vertex by a fresh copy of its symbol's
//! interior and joins stub children across every edge according to the
//! edge's subdivision. Output ids are deterministic functions of input
//! ids, so repeated runs are byte-identical.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::graph::{End, EdgeId, LabeledGraph, Sym, VertexId};
use crate::rule::{slot_assignment, validate_rule, CombRule, RuleError};

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct HistoryGraph {
    pub origin_sym: Sym,
    /// `levels[0]` is the origin level (a single vertex in well-formed
    /// graphs); `levels[n]` for `n >= 1` are the horizontal levels.
    pub levels: Vec<LabeledGraph>,
    /// `preds[n]` lists (child, parent) pairs from `levels[n + 1]` down to
    /// `levels[n]`. Kept as raw pairs so that malformed inputs (missing or
    /// doubled predecessors) can be represented and then rejected by the
    /// axiom checker.
    pub preds: Vec<Vec<(VertexId, VertexId)>>,
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum HistoryError {
    #[error("level {level}: vertex {vertex} has {count} predecessors")]
    BadPredecessor {
        level: usize,
        vertex: VertexId,
        count: usize,
    },
    #[error("depth must be at least 1")]
    BadDepth,
    #[error(transparent)]
    Rule(#[from] RuleError),
}

impl HistoryGraph {
    /// Number of expansion levels (levels beyond the origin).
    pub fn depth(&self) -> usize {
        self.levels.len().saturating_sub(1)
    }

    pub fn level(&self, n: usize) -> Option<&LabeledGraph> {
        self.levels.get(n)
    }

    /// Predecessor pairs from level `n + 1` to level `n`, as a map.
    /// Fails if some vertex of level `n + 1` has no or several parents.
    pub fn pred_map(&self, n: usize) -> Result<BTreeMap<VertexId, VertexId>, HistoryError> {
        let pairs = self
            .preds
            .get(n)
            .ok_or(HistoryError::BadDepth)?;
        let mut map: BTreeMap<VertexId, usize> = BTreeMap::new();
        let mut out = BTreeMap::new();
        for (child, parent) in pairs {
            *map.entry(*child).or_insert(0) += 1;
            out.insert(*child, *parent);
        }
        for v in self.levels[n + 1].vertex_ids() {
            let count = map.get(&v).copied().unwrap_or(0);
            if count != 1 {
                return Err(HistoryError::BadPredecessor {
                    level: n + 1,
                    vertex: v,
                    count,
                });
            }
        }
        Ok(out)
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.vertex_count()).collect()
    }
}

/// Expands one horizontal level by the rule: a fresh interior copy per
/// vertex, plus one child edge per (level edge, edge-rule child index)
/// joining the stub children on both sides. Returns the next level and the
/// (child, parent) predecessor pairs.
pub fn expand_level(
    level: &LabeledGraph,
    rule: &CombRule,
) -> Result<(LabeledGraph, Vec<(VertexId, VertexId)>), RuleError> {
    let mut next = LabeledGraph::new();
    let mut preds = Vec::new();

    // child ids: (parent vertex, interior vertex) -> fresh id, assigned in
    // ascending (parent id, interior id) order.
    let mut child_id: BTreeMap<(VertexId, VertexId), VertexId> = BTreeMap::new();
    let mut next_vid = 0u32;
    let mut next_eid = 0u32;

    for (u, sym) in level.vertices() {
        let vr = rule
            .vertex_rules
            .get(sym)
            .ok_or_else(|| RuleError::MissingVertexRule(sym.clone()))?;
        for (c, csym) in vr.interior.vertices() {
            let id = VertexId(next_vid);
            next_vid += 1;
            next.add_vertex(id, csym.clone()).expect("fresh id");
            child_id.insert((u, c), id);
            preds.push((id, u));
        }
        for (_, e) in vr.interior.edges() {
            let (a, b) = match e.ends {
                (End::Vertex(a), End::Vertex(b)) => (a, b),
                _ => {
                    return Err(RuleError::Invalid(format!(
                        "interior of {sym} contains an open edge"
                    )))
                }
            };
            next.add_edge(
                EdgeId(next_eid),
                e.sym.clone(),
                End::Vertex(child_id[&(u, a)]),
                End::Vertex(child_id[&(u, b)]),
            )
            .expect("fresh id");
            next_eid += 1;
        }
    }

    // Slot assignment per vertex, then crossing edges per level edge.
    let mut slots: BTreeMap<VertexId, Vec<EdgeId>> = BTreeMap::new();
    for (u, sym) in level.vertices() {
        let sig = rule
            .signatures
            .get(sym)
            .ok_or_else(|| RuleError::MissingSignature(sym.clone()))?;
        slots.insert(u, slot_assignment(level, u, sig)?);
    }
    let stub_child = |usym: &Sym, slot: usize, index: usize| -> Result<VertexId, RuleError> {
        let vr = &rule.vertex_rules[usym];
        vr.stubs
            .iter()
            .find(|s| s.slot == slot && s.index == index)
            .map(|s| s.child)
            .ok_or_else(|| {
                RuleError::Invalid(format!("no stub (slot {slot}, index {index}) for {usym}"))
            })
    };

    for (eid, e) in level.edges() {
        let (u, w) = match e.ends {
            (End::Vertex(u), End::Vertex(w)) => (u, w),
            _ => {
                return Err(RuleError::Invalid(format!(
                    "level edge {eid} has an open end"
                )))
            }
        };
        let er = rule
            .edge_rules
            .get(&e.sym)
            .ok_or_else(|| RuleError::MissingEdgeRule(e.sym.clone()))?;
        let slot_u = slots[&u]
            .iter()
            .position(|x| *x == eid)
            .expect("edge assigned at u");
        let slot_w = slots[&w]
            .iter()
            .position(|x| *x == eid)
            .expect("edge assigned at w");
        let usym = level.vertex_sym(u).expect("vertex exists");
        let wsym = level.vertex_sym(w).expect("vertex exists");
        for (j, child_sym) in er.0.iter().enumerate() {
            let cu = stub_child(usym, slot_u, j)?;
            let cw = stub_child(wsym, slot_w, j)?;
            next.add_edge(
                EdgeId(next_eid),
                child_sym.clone(),
                End::Vertex(child_id[&(u, cu)]),
                End::Vertex(child_id[&(w, cw)]),
            )
            .expect("fresh id");
            next_eid += 1;
        }
    }

    Ok((next, preds))
}

/// Builds the history graph of `rule` to the given depth: origin, seed,
/// then repeated expansion. Validation failures abort the build.
pub fn build_history(rule: &CombRule, depth: usize) -> Result<HistoryGraph, HistoryError> {
    if depth < 1 {
        return Err(HistoryError::BadDepth);
    }
    let report = validate_rule(rule);
    if !report.is_pass() {
        return Err(HistoryError::Rule(RuleError::Invalid(report.to_string())));
    }

    let origin = VertexId(0);
    let mut level0 = LabeledGraph::new();
    level0
        .add_vertex(origin, rule.alphabet.origin.clone())
        .expect("fresh");

    let mut levels = vec![level0, rule.seed.clone()];
    let mut preds = vec![rule
        .seed
        .vertex_ids()
        .map(|v| (v, origin))
        .collect::<Vec<_>>()];

    for _ in 1..depth {
        let (next, pred) = expand_level(levels.last().expect("nonempty"), rule)?;
        levels.push(next);
        preds.push(pred);
    }

    Ok(HistoryGraph {
        origin_sym: rule.alphabet.origin.clone(),
        levels,
        preds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canon::{are_isomorphic, canonical_form};
    use crate::gallery;

    #[test]
    fn ident_expansion_is_isomorphic_to_input() {
        let rule = gallery::ident();
        let (next, _) = expand_level(&rule.seed, &rule).unwrap();
        assert!(are_isomorphic(&rule.seed, &next).is_some());
    }

    #[test]
    fn cycdb_doubles_the_cycle() {
        let rule = gallery::cycdb();
        let (next, preds) = expand_level(&rule.seed, &rule).unwrap();
        assert_eq!(next.vertex_count(), 6);
        assert_eq!(next.edge_count(), 6);
        assert_eq!(preds.len(), 6);
        // 3 interior + 3 crossing edges, all labeled h; the result is a
        // single 6-cycle.
        let mut hexagon = LabeledGraph::new();
        for i in 0..6 {
            hexagon.add_vertex(VertexId(i), Sym::new("a")).unwrap();
        }
        for i in 0..6 {
            hexagon
                .add_edge(
                    EdgeId(i),
                    Sym::new("h"),
                    End::Vertex(VertexId(i)),
                    End::Vertex(VertexId((i + 1) % 6)),
                )
                .unwrap();
        }
        assert_eq!(canonical_form(&next), canonical_form(&hexagon));
    }

    #[test]
    fn cycdb_level_sizes_double() {
        let rule = gallery::cycdb();
        let h = build_history(&rule, 10).unwrap();
        let expected: Vec<usize> = std::iter::once(1)
            .chain((0..10).map(|n| 3 * (1usize << n)))
            .collect();
        assert_eq!(h.level_sizes(), expected);
    }

    #[test]
    fn ident_levels_are_constant() {
        let rule = gallery::ident();
        let h = build_history(&rule, 4).unwrap();
        assert_eq!(h.level_sizes(), vec![1, 3, 3, 3, 3]);
    }

    #[test]
    fn vertex_and_edge_count_recurrences_hold() {
        let rule = gallery::cycdb();
        let h = build_history(&rule, 6).unwrap();
        for n in 1..h.depth() {
            let level = &h.levels[n];
            let next = &h.levels[n + 1];
            let expected_vertices: usize = level
                .vertices()
                .map(|(_, sym)| rule.vertex_rules[sym].interior.vertex_count())
                .sum();
            assert_eq!(next.vertex_count(), expected_vertices);
            let interior: usize = level
                .vertices()
                .map(|(_, sym)| rule.vertex_rules[sym].interior.edge_count())
                .sum();
            let crossing: usize = level
                .edges()
                .map(|(_, e)| rule.edge_rules[&e.sym].arity())
                .sum();
            assert_eq!(next.edge_count(), interior + crossing);
        }
    }

    #[test]
    fn expansion_is_deterministic() {
        let rule = gallery::cycdb();
        let a = build_history(&rule, 5).unwrap();
        let b = build_history(&rule, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn relabeled_input_expands_to_isomorphic_output() {
        let rule = gallery::cycdb();
        let h = build_history(&rule, 3).unwrap();
        let level = &h.levels[2];
        let vmap: BTreeMap<VertexId, VertexId> = level
            .vertex_ids()
            .map(|v| (v, VertexId(97 - v.0 * 3)))
            .collect();
        let emap: BTreeMap<EdgeId, EdgeId> = level
            .edge_ids()
            .map(|e| (e, EdgeId(55 - e.0)))
            .collect();
        let permuted = level.relabel_ids(&vmap, &emap);
        let (a, _) = expand_level(level, &rule).unwrap();
        let (b, _) = expand_level(&permuted, &rule).unwrap();
        assert_eq!(canonical_form(&a), canonical_form(&b));
    }
}
