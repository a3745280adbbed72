//! Colored 2-dimensional finite subdivision rules on surfaces.
//!
//! Surfaces are abstract gluing data: tiles with typed sides, and side
//! pairings with an orientation flag. Subdividing replaces every tile by
//! its type's layout and re-glues child sides across every parent gluing,
//! index-aligned or index-reversed per the gluing's flag. The dual graph
//! of the non-ideal tiles feeds the history-graph machinery.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::graph::{End, EdgeId, LabeledGraph, Sym, VertexId};
use crate::history::HistoryGraph;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Color {
    NonIdeal,
    Ideal,
}

/// An edge type: its subdivision along the edge, and its color.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct EdgeType2D {
    pub id: Sym,
    pub children: Vec<Sym>,
    pub color: Color,
}

/// A side of a subtile within a layout.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct SubtileSide {
    pub subtile: u32,
    pub side: u32,
}

/// How one tile type subdivides: subtile types, interior side gluings,
/// and the assignment of the remaining subtile sides onto the parent
/// sides' child lists.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TileLayout {
    /// Type of each subtile, indexed by local subtile id.
    pub subtiles: Vec<Sym>,
    /// Pairs of subtile sides identified inside the tile, with the edge
    /// type of the resulting interior 1-cell and an orientation flag.
    pub interior_gluings: Vec<(SubtileSide, SubtileSide, Sym, bool)>,
    /// (parent side index, child index) -> subtile side carrying it.
    pub boundary: BTreeMap<(u32, u32), SubtileSide>,
}

/// A tile type: cyclically ordered sides (edge type, orientation flag),
/// a color, and a layout describing its subdivision.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TileType2D {
    pub id: Sym,
    pub sides: Vec<(Sym, bool)>,
    pub color: Color,
    pub layout: TileLayout,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SubdivisionRule2D {
    pub edge_types: BTreeMap<Sym, EdgeType2D>,
    pub tile_types: BTreeMap<Sym, TileType2D>,
}

/// A tile instance id within a surface.
pub type TileId = u32;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct TileSide {
    pub tile: TileId,
    pub side: u32,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Gluing {
    pub a: TileSide,
    pub b: TileSide,
    /// When set, child k of side `a` meets child (m - 1 - k) of side `b`.
    pub reversed: bool,
}

/// A surface built from typed tiles and side gluings. Unglued sides form
/// the boundary.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Surface2D {
    /// (tile id, tile type), ascending tile id.
    pub tiles: Vec<(TileId, Sym)>,
    pub gluings: Vec<Gluing>,
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum PlanarError {
    #[error("unknown tile type {0}")]
    UnknownTileType(Sym),
    #[error("unknown edge type {0}")]
    UnknownEdgeType(Sym),
    #[error("tile {0} referenced twice")]
    DuplicateTile(TileId),
    #[error("side ({0}, {1}) out of range")]
    SideRange(TileId, u32),
    #[error("side ({0}, {1}) glued more than once")]
    DoubleGluing(TileId, u32),
    #[error("side glued to itself at ({0}, {1})")]
    SelfGluing(TileId, u32),
    #[error("gluing {0}..{1} joins sides of different edge types ({2} vs {3})")]
    TypeMismatch(TileId, TileId, Sym, Sym),
    #[error("gluing of tiles {0} and {1}: {2}")]
    GluingStructure(TileId, TileId, String),
    #[error("rule is not well-formed: {0}")]
    BadRule(String),
    #[error("depth must be at least 1")]
    BadDepth,
}

/// Result of checking a 2D rule. `notes` flag definitional edge cases
/// that are legal but worth surfacing, in particular a non-ideal tile
/// type meeting another along an ideal edge type (such a contact still
/// produces a dual edge).
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Rule2DReport {
    pub violations: Vec<String>,
    pub notes: Vec<String>,
}

impl Rule2DReport {
    pub fn is_pass(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for Rule2DReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_pass() {
            writeln!(f, "pass")?;
        }
        for v in &self.violations {
            writeln!(f, "violation: {v}")?;
        }
        for n in &self.notes {
            writeln!(f, "note: {n}")?;
        }
        Ok(())
    }
}

pub fn validate_rule2d(rule: &SubdivisionRule2D) -> Rule2DReport {
    let mut report = Rule2DReport::default();
    let err = |report: &mut Rule2DReport, msg: String| report.violations.push(msg);

    if !rule
        .tile_types
        .values()
        .any(|t| t.color == Color::NonIdeal)
    {
        err(&mut report, "no non-ideal tile type".into());
    }

    for et in rule.edge_types.values() {
        for c in &et.children {
            match rule.edge_types.get(c) {
                None => err(&mut report, format!("edge type {} child {c} unknown", et.id)),
                Some(child) => {
                    if et.color == Color::Ideal && child.color != Color::Ideal {
                        err(
                            &mut report,
                            format!("ideal edge type {} has non-ideal child {c}", et.id),
                        );
                    }
                }
            }
        }
    }

    for tt in rule.tile_types.values() {
        if tt.sides.len() < 2 {
            err(
                &mut report,
                format!("tile type {} has fewer than 2 sides", tt.id),
            );
        }
        for (esym, _) in &tt.sides {
            if !rule.edge_types.contains_key(esym) {
                err(
                    &mut report,
                    format!("tile type {} side type {esym} unknown", tt.id),
                );
            } else if tt.color == Color::NonIdeal
                && rule.edge_types[esym].color == Color::Ideal
            {
                report.notes.push(format!(
                    "non-ideal tile type {} has an ideal side type {esym}; contacts across it still produce dual edges",
                    tt.id
                ));
            }
        }
        let layout = &tt.layout;
        for (i, st) in layout.subtiles.iter().enumerate() {
            match rule.tile_types.get(st) {
                None => err(
                    &mut report,
                    format!("layout of {}: subtile {i} type {st} unknown", tt.id),
                ),
                Some(sub) => {
                    if tt.color == Color::Ideal && sub.color != Color::Ideal {
                        err(
                            &mut report,
                            format!("ideal tile type {} has non-ideal subtile {st}", tt.id),
                        );
                    }
                }
            }
        }
        // Every subtile side interior-glued or boundary-assigned exactly once.
        let mut uses: BTreeMap<SubtileSide, usize> = BTreeMap::new();
        for (a, b, esym, _) in &layout.interior_gluings {
            *uses.entry(*a).or_insert(0) += 1;
            *uses.entry(*b).or_insert(0) += 1;
            if a == b {
                err(
                    &mut report,
                    format!("layout of {}: interior gluing joins a side to itself", tt.id),
                );
            }
            if !rule.edge_types.contains_key(esym) {
                err(
                    &mut report,
                    format!("layout of {}: interior edge type {esym} unknown", tt.id),
                );
            }
        }
        for ss in layout.boundary.values() {
            *uses.entry(*ss).or_insert(0) += 1;
        }
        for (i, st) in layout.subtiles.iter().enumerate() {
            let Some(sub) = rule.tile_types.get(st) else {
                continue;
            };
            for side in 0..sub.sides.len() as u32 {
                let ss = SubtileSide {
                    subtile: i as u32,
                    side,
                };
                match uses.get(&ss).copied().unwrap_or(0) {
                    1 => {}
                    n => err(
                        &mut report,
                        format!(
                            "layout of {}: subtile side ({i}, {side}) used {n} times",
                            tt.id
                        ),
                    ),
                }
            }
        }
        // Boundary assignment covers each parent side's child list exactly.
        for (s, (esym, _)) in tt.sides.iter().enumerate() {
            let Some(et) = rule.edge_types.get(esym) else {
                continue;
            };
            for k in 0..et.children.len() as u32 {
                if !layout.boundary.contains_key(&(s as u32, k)) {
                    err(
                        &mut report,
                        format!(
                            "layout of {}: side {s} child {k} not covered by the boundary assignment",
                            tt.id
                        ),
                    );
                }
            }
        }
        for ((s, k), _) in &layout.boundary {
            let in_range = tt
                .sides
                .get(*s as usize)
                .and_then(|(esym, _)| rule.edge_types.get(esym))
                .map(|et| (*k as usize) < et.children.len())
                .unwrap_or(false);
            if !in_range {
                err(
                    &mut report,
                    format!("layout of {}: boundary key ({s}, {k}) out of range", tt.id),
                );
            }
        }
    }
    report
}

pub fn validate_surface(x: &Surface2D, rule: &SubdivisionRule2D) -> Result<(), PlanarError> {
    let mut types: BTreeMap<TileId, &TileType2D> = BTreeMap::new();
    for (id, tsym) in &x.tiles {
        let tt = rule
            .tile_types
            .get(tsym)
            .ok_or_else(|| PlanarError::UnknownTileType(tsym.clone()))?;
        if types.insert(*id, tt).is_some() {
            return Err(PlanarError::DuplicateTile(*id));
        }
    }
    let mut glued: BTreeMap<TileSide, usize> = BTreeMap::new();
    for g in &x.gluings {
        for ts in [g.a, g.b] {
            let tt = types
                .get(&ts.tile)
                .ok_or(PlanarError::SideRange(ts.tile, ts.side))?;
            if ts.side as usize >= tt.sides.len() {
                return Err(PlanarError::SideRange(ts.tile, ts.side));
            }
            if *glued.entry(ts).or_insert(0) >= 1 {
                return Err(PlanarError::DoubleGluing(ts.tile, ts.side));
            }
            *glued.get_mut(&ts).unwrap() += 1;
        }
        if g.a == g.b {
            return Err(PlanarError::SelfGluing(g.a.tile, g.a.side));
        }
        let ta = &types[&g.a.tile].sides[g.a.side as usize].0;
        let tb = &types[&g.b.tile].sides[g.b.side as usize].0;
        if ta != tb {
            return Err(PlanarError::TypeMismatch(
                g.a.tile,
                g.b.tile,
                ta.clone(),
                tb.clone(),
            ));
        }
    }
    Ok(())
}

/// Subdivides every tile by its layout and re-glues across parent
/// gluings. Returns the new surface and the parent tile of each subtile.
/// Subtile ids are consecutive, assigned in ascending (parent tile id,
/// local subtile id) order.
pub fn subdivide_surface(
    x: &Surface2D,
    rule: &SubdivisionRule2D,
) -> Result<(Surface2D, BTreeMap<TileId, TileId>), PlanarError> {
    validate_surface(x, rule)?;
    let report = validate_rule2d(rule);
    if !report.is_pass() {
        return Err(PlanarError::BadRule(report.violations.join("; ")));
    }

    let mut out = Surface2D::default();
    let mut parent_of = BTreeMap::new();
    // (parent tile, local subtile) -> new tile id
    let mut new_id: BTreeMap<(TileId, u32), TileId> = BTreeMap::new();
    let mut counter: TileId = 0;

    for (tid, tsym) in &x.tiles {
        let layout = &rule.tile_types[tsym].layout;
        for (local, stype) in layout.subtiles.iter().enumerate() {
            out.tiles.push((counter, stype.clone()));
            new_id.insert((*tid, local as u32), counter);
            parent_of.insert(counter, *tid);
            counter += 1;
        }
    }

    let lift = |tid: TileId, ss: SubtileSide| TileSide {
        tile: new_id[&(tid, ss.subtile)],
        side: ss.side,
    };

    // Interior gluings of every tile.
    for (tid, tsym) in &x.tiles {
        let layout = &rule.tile_types[tsym].layout;
        for (a, b, _, rev) in &layout.interior_gluings {
            out.gluings.push(Gluing {
                a: lift(*tid, *a),
                b: lift(*tid, *b),
                reversed: *rev,
            });
        }
    }

    // Cross-parent gluings: child k of one side meets child k (or the
    // reversed index) of the other.
    for g in &x.gluings {
        let ta = &rule.tile_types[&tile_type_of(x, g.a.tile)];
        let tb = &rule.tile_types[&tile_type_of(x, g.b.tile)];
        let ea = &ta.sides[g.a.side as usize].0;
        let m = rule.edge_types[ea].children.len() as u32;
        let mb = rule.edge_types[&tb.sides[g.b.side as usize].0]
            .children
            .len() as u32;
        if m != mb {
            return Err(PlanarError::GluingStructure(
                g.a.tile,
                g.b.tile,
                format!("child counts differ ({m} vs {mb})"),
            ));
        }
        for k in 0..m {
            let k2 = if g.reversed { m - 1 - k } else { k };
            let sa = ta
                .layout
                .boundary
                .get(&(g.a.side, k))
                .ok_or_else(|| {
                    PlanarError::GluingStructure(
                        g.a.tile,
                        g.b.tile,
                        format!("missing boundary child ({}, {k})", g.a.side),
                    )
                })?;
            let sb = tb
                .layout
                .boundary
                .get(&(g.b.side, k2))
                .ok_or_else(|| {
                    PlanarError::GluingStructure(
                        g.a.tile,
                        g.b.tile,
                        format!("missing boundary child ({}, {k2})", g.b.side),
                    )
                })?;
            out.gluings.push(Gluing {
                a: lift(g.a.tile, *sa),
                b: lift(g.b.tile, *sb),
                reversed: g.reversed,
            });
        }
    }

    Ok((out, parent_of))
}

fn tile_type_of(x: &Surface2D, tid: TileId) -> Sym {
    x.tiles
        .iter()
        .find(|(id, _)| *id == tid)
        .map(|(_, s)| s.clone())
        .expect("tile exists")
}

/// The tiles whose type is non-ideal; this is the n-th approximation of
/// the limit set when `x` is the n-th subdivision.
pub fn nonideal_tiles(x: &Surface2D, rule: &SubdivisionRule2D) -> Vec<TileId> {
    x.tiles
        .iter()
        .filter(|(_, tsym)| {
            rule.tile_types
                .get(tsym)
                .map(|t| t.color == Color::NonIdeal)
                .unwrap_or(false)
        })
        .map(|(id, _)| *id)
        .collect()
}

/// Dual graph of the non-ideal part: one vertex per non-ideal tile
/// (labeled by its tile type), one edge per gluing joining two distinct
/// non-ideal tiles (labeled by the glued side's edge type). Gluings that
/// touch an ideal tile contribute nothing; parallel edges are kept.
pub fn dual_graph(x: &Surface2D, rule: &SubdivisionRule2D) -> LabeledGraph {
    let mut g = LabeledGraph::new();
    let mut nonideal = std::collections::BTreeSet::new();
    for (id, tsym) in &x.tiles {
        if rule
            .tile_types
            .get(tsym)
            .map(|t| t.color == Color::NonIdeal)
            .unwrap_or(false)
        {
            g.add_vertex(VertexId(*id), tsym.clone()).expect("unique");
            nonideal.insert(*id);
        }
    }
    let mut eid = 0u32;
    for gl in &x.gluings {
        if gl.a.tile == gl.b.tile {
            continue;
        }
        if nonideal.contains(&gl.a.tile) && nonideal.contains(&gl.b.tile) {
            let esym = {
                let tsym = tile_type_of(x, gl.a.tile);
                rule.tile_types[&tsym].sides[gl.a.side as usize].0.clone()
            };
            g.add_edge(
                EdgeId(eid),
                esym,
                End::Vertex(VertexId(gl.a.tile)),
                End::Vertex(VertexId(gl.b.tile)),
            )
            .expect("distinct non-ideal tiles");
            eid += 1;
        }
    }
    g
}

/// Origin symbol used by planar history graphs; extended with underscores
/// until it differs from every tile type id.
fn planar_origin_sym(rule: &SubdivisionRule2D) -> Sym {
    let mut name = String::from("origin");
    while rule.tile_types.contains_key(&Sym::new(&name)) {
        name.push('_');
    }
    Sym::new(&name)
}

/// Runs `depth` subdivisions and assembles the history graph: level n+1
/// is the dual graph of the n-th subdivision, the predecessor of a
/// subtile's dual vertex is its parent tile's dual vertex, and the origin
/// is joined to every level-1 vertex.
pub fn history_graph_2d(
    x: &Surface2D,
    rule: &SubdivisionRule2D,
    depth: usize,
) -> Result<HistoryGraph, PlanarError> {
    if depth < 1 {
        return Err(PlanarError::BadDepth);
    }
    validate_surface(x, rule)?;

    let origin_sym = planar_origin_sym(rule);
    let origin = VertexId(0);
    let mut level0 = LabeledGraph::new();
    level0.add_vertex(origin, origin_sym.clone()).expect("fresh");

    let mut levels = vec![level0, dual_graph(x, rule)];
    let mut preds = vec![levels[1]
        .vertex_ids()
        .map(|v| (v, origin))
        .collect::<Vec<_>>()];

    let mut current = x.clone();
    for _ in 1..depth {
        let (next, parent_of) = subdivide_surface(&current, rule)?;
        let dual = dual_graph(&next, rule);
        preds.push(
            dual.vertex_ids()
                .map(|v| (v, VertexId(parent_of[&v.0])))
                .collect(),
        );
        levels.push(dual);
        current = next;
    }

    Ok(HistoryGraph {
        origin_sym,
        levels,
        preds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;

    #[test]
    fn identity_rule_reproduces_the_surface() {
        let rule = gallery::identity2d();
        let tetra = gallery::tetra();
        let (next, _) = subdivide_surface(&tetra, &rule).unwrap();
        assert_eq!(next.tiles.len(), 4);
        let d0 = dual_graph(&tetra, &rule);
        let d1 = dual_graph(&next, &rule);
        assert_eq!(
            crate::canon::canonical_form(&d0),
            crate::canon::canonical_form(&d1)
        );
    }

    #[test]
    fn tetra_dual_is_complete_on_four() {
        let rule = gallery::bary();
        let tetra = gallery::tetra();
        let d = dual_graph(&tetra, &rule);
        assert_eq!(d.vertex_count(), 4);
        assert_eq!(d.edge_count(), 6);
        for v in d.vertex_ids() {
            assert_eq!(d.degree(v), 3);
        }
    }

    #[test]
    fn bary_on_tetra_counts() {
        let rule = gallery::bary();
        let tetra = gallery::tetra();
        let (s1, _) = subdivide_surface(&tetra, &rule).unwrap();
        assert_eq!(s1.tiles.len(), 24);
        let d = dual_graph(&s1, &rule);
        assert_eq!(d.vertex_count(), 24);
        for v in d.vertex_ids() {
            assert_eq!(d.degree(v), 3, "barycentric dual should be 3-regular");
        }
    }

    #[test]
    fn sier_on_tetra_counts() {
        let rule = gallery::sier();
        let tetra = gallery::tetra();
        let (s1, _) = subdivide_surface(&tetra, &rule).unwrap();
        assert_eq!(s1.tiles.len(), 16);
        assert_eq!(nonideal_tiles(&s1, &rule).len(), 12);
        // Non-ideal tile counts 4 * 3^n.
        let mut s = tetra;
        let mut expected = 4;
        for _ in 0..6 {
            assert_eq!(nonideal_tiles(&s, &rule).len(), expected);
            let (next, _) = subdivide_surface(&s, &rule).unwrap();
            s = next;
            expected *= 3;
        }
    }

    #[test]
    fn single_triangle_dual_is_one_isolated_vertex() {
        let rule = gallery::bary();
        let tri = gallery::tri1();
        let d = dual_graph(&tri, &rule);
        assert_eq!(d.vertex_count(), 1);
        assert_eq!(d.edge_count(), 0);
    }

    #[test]
    fn history_level_sizes() {
        let rule = gallery::bary();
        let h = history_graph_2d(&gallery::tetra(), &rule, 3).unwrap();
        assert_eq!(h.level_sizes(), vec![1, 4, 24, 144]);

        let quad = gallery::quad();
        let h = history_graph_2d(&gallery::tor9(), &quad, 3).unwrap();
        assert_eq!(h.level_sizes(), vec![1, 9, 36, 144]);
        for level in &h.levels[1..] {
            for v in level.vertex_ids() {
                assert_eq!(level.degree(v), 4, "torus levels are 4-regular");
            }
        }

        let sier = gallery::sier();
        let h = history_graph_2d(&gallery::tetra(), &sier, 3).unwrap();
        assert_eq!(h.level_sizes(), vec![1, 4, 12, 36]);
        for level in &h.levels[2..] {
            for v in level.vertex_ids() {
                assert_eq!(level.degree(v), 2, "corner tiles meet exactly two others");
            }
        }
    }

    #[test]
    fn dual_graph_certificate_survives_tile_permutation() {
        let rule = gallery::bary();
        let tetra = gallery::tetra();
        let (s1, _) = subdivide_surface(&tetra, &rule).unwrap();
        let permuted = Surface2D {
            tiles: s1
                .tiles
                .iter()
                .map(|(id, t)| (1000 - *id * 7, t.clone()))
                .collect(),
            gluings: s1
                .gluings
                .iter()
                .map(|g| Gluing {
                    a: TileSide {
                        tile: 1000 - g.a.tile * 7,
                        side: g.a.side,
                    },
                    b: TileSide {
                        tile: 1000 - g.b.tile * 7,
                        side: g.b.side,
                    },
                    reversed: g.reversed,
                })
                .collect(),
        };
        let a = dual_graph(&s1, &rule);
        let b = dual_graph(&permuted, &rule);
        assert_eq!(
            crate::canon::canonical_form(&a),
            crate::canon::canonical_form(&b)
        );
    }

    #[test]
    fn color_closure_is_checked() {
        let mut rule = gallery::sier();
        // Make an ideal edge type with a non-ideal child.
        let esym = Sym::new("E");
        rule.edge_types.get_mut(&esym).unwrap().color = Color::Ideal;
        let report = validate_rule2d(&rule);
        assert!(!report.is_pass());
    }
}
