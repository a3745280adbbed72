//! The machine form of a combinatorial subdivision rule.
//!
//! A rule fixes, for every vertex symbol, an ordered star signature and a
//! vertex subdivision (interior graph plus boundary stubs), and for every
//! edge symbol an ordered list of child edge symbols. Slot and child
//! indices are explicit so that expansion is fully deterministic; the
//! underlying isomorphism classes do not depend on these orders.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::graph::{End, LabeledGraph, Sym, VertexId};

/// Vertex and edge symbol sets plus the reserved origin symbol.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LabelAlphabet {
    pub vertex_syms: BTreeSet<Sym>,
    pub edge_syms: BTreeSet<Sym>,
    pub origin: Sym,
}

/// Ordered slot list of one vertex symbol; slot `i` carries an edge
/// symbol. The length equals the degree of every vertex with the symbol.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct StarSignature(pub Vec<Sym>);

impl StarSignature {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Slot symbols as a sorted multiset.
    pub fn multiset(&self) -> Vec<Sym> {
        let mut m = self.0.clone();
        m.sort();
        m
    }
}

/// Ordered child symbols of one edge symbol; empty means the edge dies.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct EdgeRule(pub Vec<Sym>);

impl EdgeRule {
    pub fn arity(&self) -> usize {
        self.0.len()
    }
}

/// A boundary stub of a vertex subdivision: child vertex `child` carries
/// child edge `index` of the edge subdivision sitting over slot `slot`.
/// All indices are 0-based.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Stub {
    pub child: VertexId,
    pub slot: usize,
    pub index: usize,
}

/// Subdivision of one vertex symbol: the interior graph (children plus
/// interior edges, no open ends) and the boundary stubs.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct VertexRule {
    pub interior: LabeledGraph,
    pub stubs: Vec<Stub>,
}

/// A complete combinatorial subdivision rule plus its seed level.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CombRule {
    pub alphabet: LabelAlphabet,
    pub signatures: BTreeMap<Sym, StarSignature>,
    pub vertex_rules: BTreeMap<Sym, VertexRule>,
    pub edge_rules: BTreeMap<Sym, EdgeRule>,
    pub seed: LabeledGraph,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Violation {
    /// A symbol referenced somewhere is missing from the alphabet, or a
    /// rule entry is missing for an alphabet symbol.
    Symbol(String),
    /// A seed vertex whose incident edge symbols do not match the
    /// signature multiset of its symbol.
    SignatureMismatch {
        vertex: VertexId,
        sym: Sym,
        detail: String,
    },
    /// The stubs of some slot are not in bijection with the child edges
    /// of its edge rule.
    StubBijection {
        sym: Sym,
        slot: usize,
        detail: String,
    },
    /// A vertex rule with no interior children.
    EmptyInterior(Sym),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Symbol(s) => write!(f, "symbol: {s}"),
            Violation::SignatureMismatch {
                vertex,
                sym,
                detail,
            } => write!(f, "seed vertex {vertex} (symbol {sym}): {detail}"),
            Violation::StubBijection { sym, slot, detail } => {
                write!(f, "slot {slot} of symbol {sym}: {detail}")
            }
            Violation::EmptyInterior(sym) => {
                write!(f, "vertex rule of {sym} has an empty interior")
            }
        }
    }
}

/// Outcome of [`validate_rule`]; violations are data, not errors.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_pass(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_pass() {
            write!(f, "pass")
        } else {
            for v in &self.violations {
                writeln!(f, "violation: {v}")?;
            }
            Ok(())
        }
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum RuleError {
    #[error("vertex {vertex} (symbol {sym}) does not match its signature: {detail}")]
    SignatureMismatch {
        vertex: VertexId,
        sym: Sym,
        detail: String,
    },
    #[error("no signature for vertex symbol {0}")]
    MissingSignature(Sym),
    #[error("no vertex rule for symbol {0}")]
    MissingVertexRule(Sym),
    #[error("no edge rule for symbol {0}")]
    MissingEdgeRule(Sym),
    #[error("rule failed validation:\n{0}")]
    Invalid(String),
}

/// Static validation of a rule: symbol closure, seed degrees against
/// signatures, stub bijections per slot, and non-empty interiors.
pub fn validate_rule(rule: &CombRule) -> ValidationReport {
    let mut violations = Vec::new();
    let alpha = &rule.alphabet;

    let check_vsym = |sym: &Sym, whence: &str, out: &mut Vec<Violation>| {
        if !alpha.vertex_syms.contains(sym) {
            out.push(Violation::Symbol(format!(
                "vertex symbol {sym} ({whence}) not in alphabet"
            )));
        }
    };
    let check_esym = |sym: &Sym, whence: &str, out: &mut Vec<Violation>| {
        if !alpha.edge_syms.contains(sym) {
            out.push(Violation::Symbol(format!(
                "edge symbol {sym} ({whence}) not in alphabet"
            )));
        }
    };

    if alpha.vertex_syms.contains(&alpha.origin) || alpha.edge_syms.contains(&alpha.origin) {
        violations.push(Violation::Symbol(format!(
            "origin symbol {} collides with the alphabet",
            alpha.origin
        )));
    }

    // Every alphabet symbol must carry its rule entries; every referenced
    // symbol must be in the alphabet.
    for sym in &alpha.vertex_syms {
        if !rule.signatures.contains_key(sym) {
            violations.push(Violation::Symbol(format!("no signature for {sym}")));
        }
        if !rule.vertex_rules.contains_key(sym) {
            violations.push(Violation::Symbol(format!("no vertex rule for {sym}")));
        }
    }
    for sym in &alpha.edge_syms {
        if !rule.edge_rules.contains_key(sym) {
            violations.push(Violation::Symbol(format!("no edge rule for {sym}")));
        }
    }
    for (sym, sig) in &rule.signatures {
        check_vsym(sym, "signature key", &mut violations);
        for s in &sig.0 {
            check_esym(s, &format!("signature of {sym}"), &mut violations);
        }
    }
    for (sym, er) in &rule.edge_rules {
        check_esym(sym, "edge rule key", &mut violations);
        for s in &er.0 {
            check_esym(s, &format!("edge rule of {sym}"), &mut violations);
        }
    }
    for (sym, vr) in &rule.vertex_rules {
        check_vsym(sym, "vertex rule key", &mut violations);
        for (_, s) in vr.interior.vertices() {
            check_vsym(s, &format!("interior of {sym}"), &mut violations);
        }
        for (id, e) in vr.interior.edges() {
            check_esym(&e.sym, &format!("interior of {sym}"), &mut violations);
            if e.attached().count() != 2 {
                violations.push(Violation::Symbol(format!(
                    "interior edge {id} of {sym} has an open end"
                )));
            }
        }
    }
    for (_, s) in rule.seed.vertices() {
        check_vsym(s, "seed", &mut violations);
    }
    for (id, e) in rule.seed.edges() {
        check_esym(&e.sym, "seed", &mut violations);
        if e.attached().count() != 2 {
            violations.push(Violation::Symbol(format!("seed edge {id} has an open end")));
        }
    }

    // Seed degrees against signatures.
    for (v, sym) in rule.seed.vertices() {
        let Some(sig) = rule.signatures.get(sym) else {
            continue;
        };
        let mut incident: Vec<Sym> = rule
            .seed
            .incident_edges(v)
            .iter()
            .map(|e| rule.seed.edge(*e).expect("incident").sym.clone())
            .collect();
        incident.sort();
        if incident != sig.multiset() {
            violations.push(Violation::SignatureMismatch {
                vertex: v,
                sym: sym.clone(),
                detail: format!(
                    "incident symbols {:?} do not match signature {:?}",
                    incident.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
                    sig.multiset()
                        .iter()
                        .map(|s| s.as_str())
                        .collect::<Vec<_>>()
                ),
            });
        }
    }

    // Stub bijections: for slot i with symbol e, the stubs with slot
    // index i biject with the child edges of EdgeRule(e).
    for (sym, vr) in &rule.vertex_rules {
        if vr.interior.vertex_count() == 0 {
            violations.push(Violation::EmptyInterior(sym.clone()));
        }
        let Some(sig) = rule.signatures.get(sym) else {
            continue;
        };
        for stub in &vr.stubs {
            if !vr.interior.has_vertex(stub.child) {
                violations.push(Violation::StubBijection {
                    sym: sym.clone(),
                    slot: stub.slot,
                    detail: format!("stub child {} is not an interior vertex", stub.child),
                });
            }
            if stub.slot >= sig.len() {
                violations.push(Violation::StubBijection {
                    sym: sym.clone(),
                    slot: stub.slot,
                    detail: format!("slot index out of range (signature length {})", sig.len()),
                });
            }
        }
        for (slot, esym) in sig.0.iter().enumerate() {
            let arity = rule.edge_rules.get(esym).map(|er| er.arity()).unwrap_or(0);
            let mut indices: Vec<usize> = vr
                .stubs
                .iter()
                .filter(|s| s.slot == slot)
                .map(|s| s.index)
                .collect();
            indices.sort_unstable();
            let expected: Vec<usize> = (0..arity).collect();
            if indices != expected {
                violations.push(Violation::StubBijection {
                    sym: sym.clone(),
                    slot,
                    detail: format!(
                        "{} stubs, EdgeRule({esym}) has {arity} child edges",
                        indices.len()
                    ),
                });
            }
        }
    }

    ValidationReport { violations }
}

/// Assigns the incident edges of `v` to the slots of its signature.
///
/// Incident edges are sorted by (edge symbol, neighbor id, edge id) and
/// matched against the slots of equal symbol in signature order. Any two
/// admissible assignments differ by a label-preserving star automorphism;
/// this one is the documented deterministic choice.
pub fn slot_assignment(
    level: &LabeledGraph,
    v: VertexId,
    sig: &StarSignature,
) -> Result<Vec<crate::graph::EdgeId>, RuleError> {
    let sym = level
        .vertex_sym(v)
        .cloned()
        .unwrap_or_else(|| Sym::new("?"));
    let mut incident: Vec<(Sym, VertexId, crate::graph::EdgeId)> = Vec::new();
    for id in level.incident_edges(v) {
        let e = level.edge(id).expect("incident");
        let other = match e.other_end(v) {
            Some(End::Vertex(w)) => w,
            _ => {
                return Err(RuleError::SignatureMismatch {
                    vertex: v,
                    sym,
                    detail: format!("incident edge {id} has an open end"),
                })
            }
        };
        incident.push((e.sym.clone(), other, id));
    }
    incident.sort();

    if incident.len() != sig.len() {
        return Err(RuleError::SignatureMismatch {
            vertex: v,
            sym,
            detail: format!("degree {} vs signature length {}", incident.len(), sig.len()),
        });
    }

    // Walk the signature in order; for each slot take the next unused
    // incident edge of the slot's symbol.
    let mut cursor: BTreeMap<&Sym, usize> = BTreeMap::new();
    let mut by_sym: BTreeMap<&Sym, Vec<crate::graph::EdgeId>> = BTreeMap::new();
    for (s, _, id) in &incident {
        by_sym.entry(s).or_default().push(*id);
    }
    let mut out = Vec::with_capacity(sig.len());
    for slot_sym in &sig.0 {
        let pool = by_sym.get(slot_sym);
        let k = cursor.entry(slot_sym).or_insert(0);
        match pool.and_then(|p| p.get(*k)) {
            Some(id) => {
                out.push(*id);
                *k += 1;
            }
            None => {
                return Err(RuleError::SignatureMismatch {
                    vertex: v,
                    sym,
                    detail: format!("incident symbols do not cover slot symbol {slot_sym}"),
                })
            }
        }
    }
    // All incident edges must be consumed.
    for (s, pool) in by_sym {
        if cursor.get(s).copied().unwrap_or(0) != pool.len() {
            return Err(RuleError::SignatureMismatch {
                vertex: v,
                sym,
                detail: format!("surplus incident edges with symbol {s}"),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;
    use crate::graph::EdgeId;

    #[test]
    fn cycdb_validates() {
        let rule = gallery::cycdb();
        assert!(validate_rule(&rule).is_pass());
    }

    #[test]
    fn deleting_a_stub_breaks_the_bijection() {
        let mut rule = gallery::cycdb();
        let vr = rule.vertex_rules.get_mut(&Sym::new("a")).unwrap();
        vr.stubs.remove(1);
        let report = validate_rule(&rule);
        assert!(!report.is_pass());
        assert!(report.violations.iter().any(|v| matches!(
            v,
            Violation::StubBijection { sym, slot: 1, .. } if sym == &Sym::new("a")
        )));
        let text = report.to_string();
        assert!(text.contains("slot 1 of symbol a"));
        assert!(text.contains("0 stubs"));
        assert!(text.contains("1 child"));
    }

    #[test]
    fn degree_one_seed_vertex_against_length_two_signature() {
        let mut rule = gallery::cycdb();
        let mut seed = LabeledGraph::new();
        seed.add_vertex(VertexId(0), Sym::new("a")).unwrap();
        seed.add_vertex(VertexId(1), Sym::new("a")).unwrap();
        seed.add_edge(
            EdgeId(0),
            Sym::new("h"),
            End::Vertex(VertexId(0)),
            End::Vertex(VertexId(1)),
        )
        .unwrap();
        rule.seed = seed;
        let report = validate_rule(&rule);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::SignatureMismatch { .. })));
    }

    #[test]
    fn slot_assignment_is_by_symbol_then_neighbor() {
        let mut g = LabeledGraph::new();
        for i in 0..4 {
            g.add_vertex(VertexId(i), Sym::new("a")).unwrap();
        }
        g.add_edge(
            EdgeId(10),
            Sym::new("k"),
            End::Vertex(VertexId(0)),
            End::Vertex(VertexId(3)),
        )
        .unwrap();
        g.add_edge(
            EdgeId(11),
            Sym::new("h"),
            End::Vertex(VertexId(0)),
            End::Vertex(VertexId(2)),
        )
        .unwrap();
        g.add_edge(
            EdgeId(12),
            Sym::new("h"),
            End::Vertex(VertexId(0)),
            End::Vertex(VertexId(1)),
        )
        .unwrap();
        let sig = StarSignature(vec![Sym::new("k"), Sym::new("h"), Sym::new("h")]);
        let slots = slot_assignment(&g, VertexId(0), &sig).unwrap();
        // Slot 0 (k) gets edge 10; slots 1 and 2 (h) get the h-edges
        // ordered by neighbor id: edge 12 (to vertex 1) then 11 (to 2).
        assert_eq!(slots, vec![EdgeId(10), EdgeId(12), EdgeId(11)]);
    }
}
