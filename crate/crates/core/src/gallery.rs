//! Bundled example rules and surfaces.
//!
//! Combinatorial rules: `CYCDB` (cycle doubling), `IDENT` (identity
//! subdivision), `BARYDUAL` (the rule read off the barycentric history
//! graph of the tetrahedron). 2-dimensional rules: `IDENTITY2D`, `BARY`
//! (barycentric, six subtriangles), `QUAD` (square into four), `SIER`
//! (three corner tiles plus an ideal center). Surfaces: `TRI1` (one
//! bounded triangle), `TETRA` (tetrahedron boundary), `TOR9` (3x3 square
//! torus). `TRI1` and `TETRA` fit the triangle rules; `TOR9` fits `QUAD`.

use std::collections::BTreeMap;

use crate::graph::{End, EdgeId, LabeledGraph, Sym, VertexId};
use crate::planar::{
    Color, EdgeType2D, Gluing, SubdivisionRule2D, SubtileSide, Surface2D, TileLayout, TileSide,
    TileType2D,
};
use crate::rule::{CombRule, EdgeRule, LabelAlphabet, StarSignature, Stub, VertexRule};

fn sym(s: &str) -> Sym {
    Sym::new(s)
}

fn three_cycle() -> LabeledGraph {
    let mut seed = LabeledGraph::new();
    for i in 0..3 {
        seed.add_vertex(VertexId(i), sym("a")).expect("fresh");
    }
    for i in 0..3 {
        seed.add_edge(
            EdgeId(i),
            sym("h"),
            End::Vertex(VertexId(i)),
            End::Vertex(VertexId((i + 1) % 3)),
        )
        .expect("fresh");
    }
    seed
}

/// Cycle-doubling rule: one vertex symbol of degree two whose subdivision
/// has two children, so every cycle level doubles in length.
pub fn cycdb() -> CombRule {
    let mut interior = LabeledGraph::new();
    interior.add_vertex(VertexId(0), sym("a")).expect("fresh");
    interior.add_vertex(VertexId(1), sym("a")).expect("fresh");
    interior
        .add_edge(
            EdgeId(0),
            sym("h"),
            End::Vertex(VertexId(0)),
            End::Vertex(VertexId(1)),
        )
        .expect("fresh");

    CombRule {
        alphabet: LabelAlphabet {
            vertex_syms: [sym("a")].into(),
            edge_syms: [sym("h")].into(),
            origin: sym("O"),
        },
        signatures: BTreeMap::from([(sym("a"), StarSignature(vec![sym("h"), sym("h")]))]),
        vertex_rules: BTreeMap::from([(
            sym("a"),
            VertexRule {
                interior,
                stubs: vec![
                    Stub {
                        child: VertexId(0),
                        slot: 0,
                        index: 0,
                    },
                    Stub {
                        child: VertexId(1),
                        slot: 1,
                        index: 0,
                    },
                ],
            },
        )]),
        edge_rules: BTreeMap::from([(sym("h"), EdgeRule(vec![sym("h")]))]),
        seed: three_cycle(),
    }
}

/// Identity subdivision: every level is a fresh copy of the previous one.
pub fn ident() -> CombRule {
    let mut interior = LabeledGraph::new();
    interior.add_vertex(VertexId(0), sym("a")).expect("fresh");

    CombRule {
        alphabet: LabelAlphabet {
            vertex_syms: [sym("a")].into(),
            edge_syms: [sym("h")].into(),
            origin: sym("O"),
        },
        signatures: BTreeMap::from([(sym("a"), StarSignature(vec![sym("h"), sym("h")]))]),
        vertex_rules: BTreeMap::from([(
            sym("a"),
            VertexRule {
                interior,
                stubs: vec![
                    Stub {
                        child: VertexId(0),
                        slot: 0,
                        index: 0,
                    },
                    Stub {
                        child: VertexId(0),
                        slot: 1,
                        index: 0,
                    },
                ],
            },
        )]),
        edge_rules: BTreeMap::from([(sym("h"), EdgeRule(vec![sym("h")]))]),
        seed: three_cycle(),
    }
}

/// The combinatorial rule inferred from the barycentric history graph of
/// the tetrahedron; every vertex subdivides into six children.
pub fn barydual() -> CombRule {
    let h = crate::planar::history_graph_2d(&tetra(), &bary(), 3)
        .expect("bundled surface fits bundled rule");
    crate::infer::infer_rule(&h).expect("barycentric history graph satisfies the axioms")
}

pub fn comb_rule(name: &str) -> Option<CombRule> {
    match name {
        "CYCDB" => Some(cycdb()),
        "IDENT" => Some(ident()),
        "BARYDUAL" => Some(barydual()),
        _ => None,
    }
}

pub const COMB_RULE_NAMES: [&str; 3] = ["CYCDB", "IDENT", "BARYDUAL"];
pub const RULE2D_NAMES: [&str; 4] = ["IDENTITY2D", "BARY", "QUAD", "SIER"];
pub const SURFACE_NAMES: [&str; 3] = ["TRI1", "TETRA", "TOR9"];

fn ss(subtile: u32, side: u32) -> SubtileSide {
    SubtileSide { subtile, side }
}

/// Identity 2D rule on a triangle tile: each tile type's layout is
/// itself, each edge type's child list is itself.
pub fn identity2d() -> SubdivisionRule2D {
    let e = EdgeType2D {
        id: sym("E"),
        children: vec![sym("E")],
        color: Color::NonIdeal,
    };
    let t = TileType2D {
        id: sym("T"),
        sides: vec![(sym("E"), false); 3],
        color: Color::NonIdeal,
        layout: TileLayout {
            subtiles: vec![sym("T")],
            interior_gluings: vec![],
            boundary: BTreeMap::from([
                ((0, 0), ss(0, 0)),
                ((1, 0), ss(0, 1)),
                ((2, 0), ss(0, 2)),
            ]),
        },
    };
    SubdivisionRule2D {
        edge_types: BTreeMap::from([(sym("E"), e)]),
        tile_types: BTreeMap::from([(sym("T"), t)]),
    }
}

/// Barycentric subdivision: six subtriangles around the barycenter, each
/// keeping the single tile type; edges split in two.
pub fn bary() -> SubdivisionRule2D {
    let e = EdgeType2D {
        id: sym("E"),
        children: vec![sym("E"), sym("E")],
        color: Color::NonIdeal,
    };
    // Subtiles s0..s5 walk the parent boundary; side 0 of each lies on
    // the parent, sides 1/2 run to the barycenter.
    let layout = TileLayout {
        subtiles: vec![sym("T"); 6],
        interior_gluings: (0..6)
            .map(|i| (ss(i, 1), ss((i + 1) % 6, 2), sym("E"), true))
            .collect(),
        boundary: BTreeMap::from([
            ((0, 0), ss(0, 0)),
            ((0, 1), ss(1, 0)),
            ((1, 0), ss(2, 0)),
            ((1, 1), ss(3, 0)),
            ((2, 0), ss(4, 0)),
            ((2, 1), ss(5, 0)),
        ]),
    };
    let t = TileType2D {
        id: sym("T"),
        sides: vec![(sym("E"), false); 3],
        color: Color::NonIdeal,
        layout,
    };
    SubdivisionRule2D {
        edge_types: BTreeMap::from([(sym("E"), e)]),
        tile_types: BTreeMap::from([(sym("T"), t)]),
    }
}

/// Square-into-four rule. Sides are indexed bottom, right, top, left;
/// subtiles run counterclockwise from the bottom-left corner.
pub fn quad() -> SubdivisionRule2D {
    let e = EdgeType2D {
        id: sym("E"),
        children: vec![sym("E"), sym("E")],
        color: Color::NonIdeal,
    };
    let layout = TileLayout {
        subtiles: vec![sym("Q"); 4],
        interior_gluings: vec![
            (ss(0, 1), ss(1, 3), sym("E"), true),
            (ss(1, 2), ss(2, 0), sym("E"), true),
            (ss(2, 3), ss(3, 1), sym("E"), true),
            (ss(3, 0), ss(0, 2), sym("E"), true),
        ],
        boundary: BTreeMap::from([
            ((0, 0), ss(0, 0)),
            ((0, 1), ss(1, 0)),
            ((1, 0), ss(1, 1)),
            ((1, 1), ss(2, 1)),
            ((2, 0), ss(2, 2)),
            ((2, 1), ss(3, 2)),
            ((3, 0), ss(3, 3)),
            ((3, 1), ss(0, 3)),
        ]),
    };
    let q = TileType2D {
        id: sym("Q"),
        sides: vec![(sym("E"), false); 4],
        color: Color::NonIdeal,
        layout,
    };
    SubdivisionRule2D {
        edge_types: BTreeMap::from([(sym("E"), e)]),
        tile_types: BTreeMap::from([(sym("Q"), q)]),
    }
}

/// Corner subdivision with an ideal center: every triangle splits into
/// three corner triangles of the same type plus one ideal center tile,
/// which keeps subdividing ideally.
pub fn sier() -> SubdivisionRule2D {
    let e = EdgeType2D {
        id: sym("E"),
        children: vec![sym("E"), sym("E")],
        color: Color::NonIdeal,
    };
    // Shared combinatorics of the midpoint subdivision: corner subtiles
    // 0..2 at the parent corners, subtile 3 in the center.
    let corner_layout = |center: Sym| TileLayout {
        subtiles: vec![sym("T"), sym("T"), sym("T"), center],
        interior_gluings: vec![
            (ss(0, 1), ss(3, 2), sym("E"), true),
            (ss(1, 2), ss(3, 0), sym("E"), true),
            (ss(2, 2), ss(3, 1), sym("E"), true),
        ],
        boundary: BTreeMap::from([
            ((0, 0), ss(0, 0)),
            ((0, 1), ss(1, 0)),
            ((1, 0), ss(1, 1)),
            ((1, 1), ss(2, 0)),
            ((2, 0), ss(2, 1)),
            ((2, 1), ss(0, 2)),
        ]),
    };
    let ideal_layout = TileLayout {
        subtiles: vec![sym("X"); 4],
        interior_gluings: vec![
            (ss(0, 1), ss(3, 2), sym("E"), true),
            (ss(1, 2), ss(3, 0), sym("E"), true),
            (ss(2, 2), ss(3, 1), sym("E"), true),
        ],
        boundary: BTreeMap::from([
            ((0, 0), ss(0, 0)),
            ((0, 1), ss(1, 0)),
            ((1, 0), ss(1, 1)),
            ((1, 1), ss(2, 0)),
            ((2, 0), ss(2, 1)),
            ((2, 1), ss(0, 2)),
        ]),
    };
    let t = TileType2D {
        id: sym("T"),
        sides: vec![(sym("E"), false); 3],
        color: Color::NonIdeal,
        layout: corner_layout(sym("X")),
    };
    let x = TileType2D {
        id: sym("X"),
        sides: vec![(sym("E"), false); 3],
        color: Color::Ideal,
        layout: ideal_layout,
    };
    SubdivisionRule2D {
        edge_types: BTreeMap::from([(sym("E"), e)]),
        tile_types: BTreeMap::from([(sym("T"), t), (sym("X"), x)]),
    }
}

pub fn rule2d(name: &str) -> Option<SubdivisionRule2D> {
    match name {
        "IDENTITY2D" => Some(identity2d()),
        "BARY" => Some(bary()),
        "QUAD" => Some(quad()),
        "SIER" => Some(sier()),
        _ => None,
    }
}

/// A single bounded triangle.
pub fn tri1() -> Surface2D {
    Surface2D {
        tiles: vec![(0, sym("T"))],
        gluings: vec![],
    }
}

/// The boundary of a tetrahedron: four triangles, pairwise glued.
pub fn tetra() -> Surface2D {
    let ts = |tile, side| TileSide { tile, side };
    let glue = |a: TileSide, b: TileSide| Gluing {
        a,
        b,
        reversed: true,
    };
    Surface2D {
        tiles: (0..4).map(|i| (i, sym("T"))).collect(),
        gluings: vec![
            glue(ts(0, 0), ts(3, 1)),
            glue(ts(0, 1), ts(1, 1)),
            glue(ts(0, 2), ts(2, 1)),
            glue(ts(1, 0), ts(2, 2)),
            glue(ts(1, 2), ts(3, 0)),
            glue(ts(2, 0), ts(3, 2)),
        ],
    }
}

/// A 3x3 torus of squares; tile (column i, row j) has id 3j + i.
pub fn tor9() -> Surface2D {
    let id = |i: u32, j: u32| 3 * (j % 3) + (i % 3);
    let ts = |tile, side| TileSide { tile, side };
    let mut gluings = Vec::new();
    for j in 0..3 {
        for i in 0..3 {
            // Right side meets the left side of the next column.
            gluings.push(Gluing {
                a: ts(id(i, j), 1),
                b: ts(id(i + 1, j), 3),
                reversed: true,
            });
            // Top side meets the bottom side of the next row.
            gluings.push(Gluing {
                a: ts(id(i, j), 2),
                b: ts(id(i, j + 1), 0),
                reversed: true,
            });
        }
    }
    Surface2D {
        tiles: (0..9).map(|i| (i, sym("Q"))).collect(),
        gluings,
    }
}

pub fn surface(name: &str) -> Option<Surface2D> {
    match name {
        "TRI1" => Some(tri1()),
        "TETRA" => Some(tetra()),
        "TOR9" => Some(tor9()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planar::validate_surface;

    #[test]
    fn bundled_rules_validate() {
        assert!(crate::rule::validate_rule(&cycdb()).is_pass());
        assert!(crate::rule::validate_rule(&ident()).is_pass());
        for name in RULE2D_NAMES {
            let rule = rule2d(name).unwrap();
            let report = crate::planar::validate_rule2d(&rule);
            assert!(report.is_pass(), "{name}: {report}");
        }
    }

    #[test]
    fn bundled_surfaces_fit_their_rules() {
        let bary = bary();
        validate_surface(&tri1(), &bary).unwrap();
        validate_surface(&tetra(), &bary).unwrap();
        validate_surface(&tetra(), &sier()).unwrap();
        validate_surface(&tetra(), &identity2d()).unwrap();
        validate_surface(&tor9(), &quad()).unwrap();
    }
}
