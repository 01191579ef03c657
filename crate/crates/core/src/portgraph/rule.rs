use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::graph::{PortGraph, PortId};
use super::record::Signature;
use super::PortGraphError;

/// A port of the arrow node, with the edges it carries to the two sides.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ArrowPort {
    /// External edges on the image of `lhs` are copied onto every `rhs` port.
    Bridge { lhs: PortId, rhs: Vec<PortId> },
    /// External edges on the images of these ports are erased.
    Blackhole { lhs: Vec<PortId> },
    /// Every external neighbour of the first port's image is joined to every
    /// external neighbour of the second port's image.
    Wire { lhs: [PortId; 2] },
}

/// A port-graph rewrite rule `L ⇒ R` with its arrow node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RuleRepr", into = "RuleRepr")]
pub struct RewriteRule {
    name: String,
    lhs: PortGraph,
    rhs: PortGraph,
    arrow: Vec<ArrowPort>,
}

#[derive(Serialize, Deserialize)]
struct RuleRepr {
    name: String,
    lhs: PortGraph,
    rhs: PortGraph,
    arrow: Vec<ArrowPort>,
}

impl TryFrom<RuleRepr> for RewriteRule {
    type Error = PortGraphError;

    fn try_from(r: RuleRepr) -> Result<Self, Self::Error> {
        RewriteRule::new(r.name, r.lhs, r.rhs, r.arrow)
    }
}

impl From<RewriteRule> for RuleRepr {
    fn from(r: RewriteRule) -> Self {
        RuleRepr { name: r.name, lhs: r.lhs, rhs: r.rhs, arrow: r.arrow }
    }
}

impl RewriteRule {
    pub fn new(
        name: impl Into<String>,
        lhs: PortGraph,
        rhs: PortGraph,
        arrow: Vec<ArrowPort>,
    ) -> Result<Self, PortGraphError> {
        let name = name.into();
        let invalid = |reason: String| PortGraphError::InvalidRule { rule: name.clone(), reason };

        for side in [&lhs, &rhs] {
            side.check_invariants().map_err(|e| invalid(e.join("; ")))?;
            let records = side
                .nodes()
                .map(|(_, n)| &n.record)
                .chain(side.ports().map(|(_, p)| &p.record))
                .chain(side.edges().map(|(_, e)| &e.record));
            for r in records {
                if let Some(v) = r.attribute_vars().next() {
                    return Err(PortGraphError::AttributeVariable(v.to_string()));
                }
            }
        }

        let mut blackholes = 0;
        for a in &arrow {
            match a {
                ArrowPort::Bridge { lhs: l, rhs: rs } => {
                    if lhs.port(*l).is_none() {
                        return Err(invalid(format!("bridge source {l} is not an lhs port")));
                    }
                    if rs.is_empty() {
                        return Err(invalid(format!("bridge from {l} has no rhs port")));
                    }
                    if let Some(r) = rs.iter().find(|r| rhs.port(**r).is_none()) {
                        return Err(invalid(format!("bridge target {r} is not an rhs port")));
                    }
                }
                ArrowPort::Blackhole { lhs: ls } => {
                    blackholes += 1;
                    if let Some(l) = ls.iter().find(|l| lhs.port(**l).is_none()) {
                        return Err(invalid(format!("blackhole source {l} is not an lhs port")));
                    }
                }
                ArrowPort::Wire { lhs: [a, b] } => {
                    if a == b {
                        return Err(invalid(format!("wire joins port {a} to itself")));
                    }
                    if lhs.port(*a).is_none() || lhs.port(*b).is_none() {
                        return Err(invalid(format!("wire {a}-{b} uses a non-lhs port")));
                    }
                }
            }
        }
        if blackholes > 1 {
            return Err(invalid("more than one blackhole port".into()));
        }

        let sig = Signature::of(
            [&lhs, &rhs]
                .into_iter()
                .flat_map(|g| {
                    g.nodes()
                        .map(|(_, n)| &n.record)
                        .chain(g.ports().map(|(_, p)| &p.record))
                        .chain(g.edges().map(|(_, e)| &e.record))
                        .collect::<Vec<_>>()
                }),
        );
        if let Some(o) = sig.overlaps().first() {
            return Err(invalid(format!("`{o}` is both an attribute and a variable")));
        }

        let bound: BTreeSet<&str> = records_of(&lhs).flat_map(|r| r.value_vars()).collect();
        for r in records_of(&rhs) {
            if let Some(v) = r.value_vars().find(|v| !bound.contains(v)) {
                return Err(invalid(format!("rhs variable `{v}` is not bound by the lhs")));
            }
        }

        Ok(RewriteRule { name, lhs, rhs, arrow })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lhs(&self) -> &PortGraph {
        &self.lhs
    }

    pub fn rhs(&self) -> &PortGraph {
        &self.rhs
    }

    pub fn arrow(&self) -> &[ArrowPort] {
        &self.arrow
    }

    /// Whether an lhs port is attached to the arrow node.
    pub fn is_arrow_connected(&self, p: PortId) -> bool {
        self.arrow.iter().any(|a| match a {
            ArrowPort::Bridge { lhs, .. } => *lhs == p,
            ArrowPort::Blackhole { lhs } => lhs.contains(&p),
            ArrowPort::Wire { lhs } => lhs.contains(&p),
        })
    }

    /// Rhs ports an lhs port is bridged to.
    pub fn bridge_targets(&self, p: PortId) -> impl Iterator<Item = PortId> + '_ {
        self.arrow.iter().flat_map(move |a| match a {
            ArrowPort::Bridge { lhs, rhs } if *lhs == p => rhs.as_slice(),
            _ => &[],
        }).copied()
    }
}

fn records_of(g: &PortGraph) -> impl Iterator<Item = &super::record::Record> {
    g.nodes()
        .map(|(_, n)| &n.record)
        .chain(g.ports().map(|(_, p)| &p.record))
        .chain(g.edges().map(|(_, e)| &e.record))
}
