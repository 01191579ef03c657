use serde::{Deserialize, Serialize};

use crate::portgraph::LocatedGraph;

/// One state of a derivation. Every node but the root records the rule
/// application that produced it from its parent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivationNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub rule: Option<String>,
    /// Digest of the morphism the rule was applied at.
    pub digest: Option<String>,
    pub state: LocatedGraph,
}

/// A node without its state, for outlines and deltas.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivationStep {
    pub id: usize,
    pub parent: Option<usize>,
    pub rule: Option<String>,
    pub digest: Option<String>,
}

/// Rewriting states linked by rule applications. Ids are indices in
/// application order, so a parent always precedes its children.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivationTree {
    nodes: Vec<DerivationNode>,
}

impl DerivationTree {
    pub fn new(root: LocatedGraph) -> Self {
        DerivationTree { nodes: vec![DerivationNode { id: 0, parent: None, rule: None, digest: None, state: root }] }
    }

    pub fn root(&self) -> &DerivationNode {
        &self.nodes[0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Never true: the root always exists.
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn get(&self, id: usize) -> Option<&DerivationNode> {
        self.nodes.get(id)
    }

    pub fn nodes(&self) -> &[DerivationNode] {
        &self.nodes
    }

    pub fn children(&self, id: usize) -> impl Iterator<Item = &DerivationNode> {
        self.nodes.iter().filter(move |n| n.parent == Some(id))
    }

    /// Ids from the root down to `id`.
    pub fn path_to(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = self.nodes.get(id).map(|n| n.id);
        while let Some(c) = cur {
            out.push(c);
            cur = self.nodes[c].parent;
        }
        out.reverse();
        out
    }

    pub fn push(&mut self, parent: usize, rule: &str, digest: String, state: LocatedGraph) -> usize {
        assert!(parent < self.nodes.len(), "parent {parent} is not in the tree");
        let id = self.nodes.len();
        self.nodes.push(DerivationNode {
            id,
            parent: Some(parent),
            rule: Some(rule.to_owned()),
            digest: Some(digest),
            state,
        });
        id
    }

    /// Drop nodes created after the tree had `len` nodes.
    pub(crate) fn truncate(&mut self, len: usize) {
        self.nodes.truncate(len.max(1));
    }

    pub fn outline(&self) -> Vec<DerivationStep> {
        self.steps_from(0)
    }

    /// Outline of the nodes with id `from` and later.
    pub fn steps_from(&self, from: usize) -> Vec<DerivationStep> {
        self.nodes
            .iter()
            .skip(from)
            .map(|n| DerivationStep { id: n.id, parent: n.parent, rule: n.rule.clone(), digest: n.digest.clone() })
            .collect()
    }
}
