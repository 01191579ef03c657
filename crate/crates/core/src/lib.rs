//! Category-based access control policies with obligations, represented as
//! typed port graphs.
//!
//! The crate is layered bottom-up:
//!
//! - [`portgraph`]: attributed port graphs, rewrite rules with arrow-node
//!   rewiring, matching, and located-graph bookkeeping.
//! - [`strategy`]: parser and interpreter for the strategy language that
//!   drives rewriting, producing a derivation tree.
//! - [`policy`]: the policy-graph type system, typed paths, redundancy
//!   detection, well-formedness validation, relation extraction and
//!   authorization decisions.
//! - [`obligation`]: event/scheme matching, duty instantiation and the duty
//!   state machine over event histories.
//! - [`workspace`]: the declarative policy file format, visual attributes,
//!   view filters, exports and duty reports.

pub mod obligation;
pub mod policy;
pub mod portgraph;
pub mod strategy;
pub mod workspace;
