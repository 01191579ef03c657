//! The strategy language: a small program over rule applications and
//! position/banned updates that drives a rewriting derivation.
//!
//! ```text
//! strategy := step (";" step)*
//! step     := "id" | "fail" | "one(" RULE ")" | RULE | "repeat(" strategy ")"
//!           | "while(" cond ")do(" strategy ")" | "setPos(" set ")" | "setBan(" set ")"
//!           | "(" strategy ")"
//! cond     := "not(" cond ")" | "isEmpty(" set ")" | strategy
//! set      := atom (("[cup]" | "\") atom)*
//! atom     := "crtGraph" | "crtPos" | "crtBan" | "all(" set ")" | "one(" set ")"
//!           | "property(" set "," kind "," pred ")" | "ngb(" set "," kind "," pred ")"
//!           | "(" set ")"
//! kind     := "node" | "edge"
//! pred     := ATTR "==" (STRING | INT | "true" | "false")
//! ```
//!
//! `one(R)` applies `R` at its first admissible match in canonical order and
//! fails if there is none. A failing sequence or `while` restores the state it
//! started from. `repeat` stops at the first failing iteration and always
//! succeeds. A `while` condition that is a strategy is tried on a copy of the
//! state and never committed.

mod ast;
mod eval;
mod parse;
mod tree;

pub use ast::{Cond, ElemKind, Pred, SetExpr, Strategy};
pub use eval::{eval_in_tree, eval_strategy, EvalOptions, Evaluation, Run, RuleSet, DEFAULT_BUDGET};
pub use parse::{parse_strategy, SyntaxError};
pub use tree::{DerivationNode, DerivationStep, DerivationTree};

use thiserror::Error;

use crate::portgraph::PortGraphError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StrategyError {
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),

    #[error("unknown rule `{0}`")]
    UnknownRule(String),

    #[error("step budget of {0} exhausted")]
    BudgetExceeded(usize),

    #[error("derivation node {0} does not exist")]
    UnknownNode(usize),

    #[error(transparent)]
    Rewrite(#[from] PortGraphError),
}
