//! Predicate/transition nets: value types, firing, reachability and the
//! round-trip test tree.

mod explore;
mod firing;
mod marking;
mod net;

pub use explore::{reach_graph, test_tree, Bounds, Edge, ReachGraph, TestTree, TreeVertex, VertexKind};
pub use firing::{enabled, enabled_with_successors, fire, FireError};
pub use marking::{Marking, MarkingKey};
pub use net::{cmp_ids, compile_net, Arc, Pattern, Place, Position, PrTNet, Token, Transition};

pub(crate) use net::fmt_pattern_list;

/// Canonical key of a marking.
pub fn canonical(m: &Marking) -> MarkingKey {
    m.canonical()
}
