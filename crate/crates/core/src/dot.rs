//! DOT export for history graphs.

use std::fmt::Write as _;

use crate::graph::End;
use crate::history::HistoryGraph;

#[derive(Clone, Debug)]
pub struct DotOptions {
    /// Name of the emitted graph.
    pub name: String,
}

impl Default for DotOptions {
    fn default() -> Self {
        DotOptions {
            name: "history".into(),
        }
    }
}

/// Renders the history graph: one node per vertex named `L{level}_{id}`
/// labeled with its symbol, horizontal edges solid, vertical
/// (predecessor) edges dashed. Output is byte-reproducible: nodes and
/// edges are emitted in sorted order.
pub fn export_dot(h: &HistoryGraph, options: &DotOptions) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "graph {} {{", options.name);
    for (n, level) in h.levels.iter().enumerate() {
        for (v, sym) in level.vertices() {
            let _ = writeln!(out, "  L{n}_{v} [label=\"{sym}\"];");
        }
    }
    for (n, level) in h.levels.iter().enumerate() {
        for (_, e) in level.edges() {
            if let (End::Vertex(a), End::Vertex(b)) = e.ends {
                let _ = writeln!(
                    out,
                    "  L{n}_{a} -- L{n}_{b} [style=solid, label=\"{}\"];",
                    e.sym
                );
            }
        }
    }
    for (n, pairs) in h.preds.iter().enumerate() {
        let mut sorted = pairs.clone();
        sorted.sort();
        for (child, parent) in sorted {
            let _ = writeln!(
                out,
                "  L{}_{parent} -- L{}_{child} [style=dashed];",
                n,
                n + 1
            );
        }
    }
    let _ = writeln!(out, "}}");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;
    use crate::history::build_history;

    #[test]
    fn origin_only_graph_is_a_single_node() {
        let h = HistoryGraph {
            origin_sym: crate::graph::Sym::new("O"),
            levels: vec![{
                let mut g = crate::graph::LabeledGraph::new();
                g.add_vertex(crate::graph::VertexId(0), crate::graph::Sym::new("O"))
                    .unwrap();
                g
            }],
            preds: vec![],
        };
        let text = export_dot(&h, &DotOptions::default());
        assert_eq!(text.matches("label=").count(), 1);
        assert!(!text.contains("--"));
    }

    #[test]
    fn cycdb_depth_two_counts() {
        let h = build_history(&gallery::cycdb(), 2).unwrap();
        let text = export_dot(&h, &DotOptions::default());
        let nodes = text
            .lines()
            .filter(|l| l.contains("label=") && !l.contains("--"))
            .count();
        assert_eq!(nodes, 10, "{text}");
        assert_eq!(text.matches("style=solid").count(), 9);
        assert_eq!(text.matches("style=dashed").count(), 9);
    }

    #[test]
    fn output_is_byte_identical_across_runs() {
        let h = build_history(&gallery::cycdb(), 3).unwrap();
        let a = export_dot(&h, &DotOptions::default());
        let b = export_dot(&h, &DotOptions::default());
        assert_eq!(a, b);
    }
}
