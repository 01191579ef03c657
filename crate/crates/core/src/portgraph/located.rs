use serde::{Deserialize, Serialize};

use super::graph::{PortGraph, Subgraph};
use super::matching::{match_rule, Morphism};
use super::rewrite::apply_rule_traced;
use super::rule::RewriteRule;
use super::PortGraphError;

/// A graph with a position subgraph (where rewriting may happen) and a banned
/// subgraph (where it may not).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocatedGraph {
    pub graph: PortGraph,
    pub position: Subgraph,
    pub banned: Subgraph,
}

impl LocatedGraph {
    /// Position is the whole graph, nothing banned.
    pub fn new(graph: PortGraph) -> Self {
        let position = Subgraph::whole(&graph);
        LocatedGraph { graph, position, banned: Subgraph::new() }
    }

    pub fn is_consistent(&self) -> bool {
        self.position.is_subset(&Subgraph::whole(&self.graph))
            && self.banned.is_subset(&Subgraph::whole(&self.graph))
    }
}

/// A rewrite rule `L_W ⇒ R_M^N`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocatedRule {
    pub rule: RewriteRule,
    /// Lhs elements whose images must be exactly the part of the match inside
    /// the position subgraph. `None` leaves the position unconstrained.
    #[serde(default)]
    pub where_lhs: Option<Subgraph>,
    /// Rhs elements added to the position after rewriting.
    #[serde(default)]
    pub pos_rhs: Subgraph,
    /// Rhs elements added to the banned subgraph after rewriting.
    #[serde(default)]
    pub ban_rhs: Subgraph,
}

impl LocatedRule {
    /// A located rule that keeps the whole rhs in position and bans nothing.
    pub fn plain(rule: RewriteRule) -> Self {
        let pos_rhs = Subgraph::whole(rule.rhs());
        LocatedRule { rule, where_lhs: None, pos_rhs, ban_rhs: Subgraph::new() }
    }

    pub fn name(&self) -> &str {
        self.rule.name()
    }

    /// Check the located-application preconditions for `f`.
    pub fn admits(&self, host: &LocatedGraph, f: &Morphism) -> Result<(), PortGraphError> {
        let image = f.image();
        if !image.intersection(&host.banned).is_empty() {
            return Err(PortGraphError::BannedViolation);
        }
        if let Some(w) = &self.where_lhs {
            if image.intersection(&host.position) != f.image_of(w) {
                return Err(PortGraphError::PositionViolation);
            }
        }
        Ok(())
    }
}

/// Matches of `lrule` in `host` that satisfy the position and banned
/// constraints, in canonical order.
pub fn located_matches(host: &LocatedGraph, lrule: &LocatedRule) -> Vec<Morphism> {
    match_rule(&host.graph, &lrule.rule)
        .into_iter()
        .filter(|f| lrule.admits(host, f).is_ok())
        .collect()
}

/// `G_P^Q →f G'_{P'}^{Q'}` with `P' = (P \ f(L)) ∪ f(M)` and `Q' = Q ∪ f(N)`.
///
/// An edge reconnected by the arrow node is the same relation attached
/// elsewhere, so it keeps the position and banned membership of the edge it
/// was rewired from. Both sets are then restricted to elements of `G'`.
pub fn apply_located_rule(
    host: &LocatedGraph,
    lrule: &LocatedRule,
    f: &Morphism,
) -> Result<LocatedGraph, PortGraphError> {
    lrule.admits(host, f)?;
    let out = apply_rule_traced(&host.graph, &lrule.rule, f)?;
    let rhs_image = |s: &Subgraph| Subgraph::from_elems(s.elems().filter_map(|e| out.rhs_image.get(&e).copied()));
    let mut position = host.position.difference(&f.image()).union(&rhs_image(&lrule.pos_rhs));
    let mut banned = host.banned.union(&rhs_image(&lrule.ban_rhs));
    for (old, new) in &out.rewired {
        if host.position.edges.contains(old) {
            position.edges.insert(*new);
        }
        if host.banned.edges.contains(old) {
            banned.edges.insert(*new);
        }
    }
    Ok(LocatedGraph {
        position: position.restrict_to(&out.graph),
        banned: banned.restrict_to(&out.graph),
        graph: out.graph,
    })
}
