//! Attributed port graphs and arrow-node rewriting.
//!
//! A [`PortGraph`] is a set of nodes, ports and undirected edges, every
//! element labelled by a [`Record`]. Edges attach to ports, ports belong to
//! nodes. A [`RewriteRule`] pairs a left- and right-hand graph with an arrow
//! node whose bridge, blackhole and wire ports say how edges leaving the
//! matched subgraph are reconnected. Rewriting runs in three phases: build
//! (add the instantiated right-hand side), rewire, and delete (remove the
//! matched left-hand side).
//!
//! [`LocatedGraph`] and [`LocatedRule`] add position and banned subgraphs so a
//! strategy can restrict where rules apply.

mod canon;
mod dot;
mod graph;
mod located;
mod matching;
mod record;
mod rewrite;
mod rule;

pub use canon::canonical_form;
pub use dot::to_dot;
pub use graph::{Edge, EdgeId, Elem, Node, NodeId, Port, PortGraph, PortId, Subgraph};
pub use located::{apply_located_rule, located_matches, LocatedGraph, LocatedRule};
pub use matching::{match_rule, Morphism};
pub use record::{Record, Signature, Term, Value, ATTR_VAR_PREFIX, STRUCTURAL_ATTRS};
pub use rewrite::{apply_rule, apply_rule_traced, Rewritten};
pub use rule::{ArrowPort, RewriteRule};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PortGraphError {
    #[error("element {0:?} does not exist")]
    MissingElement(Elem),

    #[error("invalid rule `{rule}`: {reason}")]
    InvalidRule { rule: String, reason: String },

    #[error("attribute variable `{0}` is not supported in rules")]
    AttributeVariable(String),

    #[error("morphism does not match the host graph: {0}")]
    InvalidMorphism(String),

    #[error("match overlaps the banned subgraph")]
    BannedViolation,

    #[error("match does not meet the position subgraph exactly at the rule's W")]
    PositionViolation,
}
