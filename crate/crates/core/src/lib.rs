//! Combinatorial subdivision rules, their history graphs, and symbolic
//! three-dimensional realizations.
//!
//! The crate is organized around a pipeline:
//!
//! * [`graph`] — finite labeled multigraphs with open edge ends, the
//!   shared currency of every other module.
//! * [`canon`] — exact canonical forms and labeled isomorphism.
//! * [`rule`] / [`history`] — machine form of combinatorial subdivision
//!   rules, validation, and level-by-level expansion into history graphs.
//! * [`axioms`] / [`infer`] — the five history-graph axioms on finite
//!   prefixes, label refinement, and rule inference from raw graphs.
//! * [`planar`] / [`gallery`] — colored 2-dimensional subdivision rules on
//!   surfaces, their dual graphs, and the bundled example gallery.
//! * [`realize`] — the symbolic 3-dimensional subdivision pair built from
//!   any combinatorial rule, and the cross-check that its cell-level
//!   history agrees with direct expansion.
//! * [`doc`] / [`dot`] / [`stats`] — text formats, DOT export, and growth
//!   statistics behind the `subdiv` command-line tool.

pub mod axioms;
pub mod canon;
pub mod cli;
pub mod doc;
pub mod dot;
pub mod gallery;
pub mod gen;
pub mod graph;
pub mod history;
pub mod infer;
pub mod planar;
pub mod realize;
pub mod rule;
pub mod stats;

pub use canon::{are_isomorphic, canonical_form, canonical_order, Certificate};
pub use graph::{
    fragment_preimage, open_star, End, FragmentTarget, LabeledGraph, LabeledIsomorphism, StarGraph,
    Sym, VertexId,
};
pub use history::{build_history, expand_level, HistoryGraph};
pub use rule::{validate_rule, CombRule, EdgeRule, LabelAlphabet, StarSignature, VertexRule};
