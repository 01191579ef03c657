use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::policy::{validate, Auth, EdgeKind, NodeType, Phase, PolicyError, PolicyGraph, TypedView};
use crate::portgraph::{EdgeId, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Pentagon,
    Triangle,
    Hexagon,
    Square,
    Diamond,
    Circle,
    Ring,
}

impl Shape {
    pub fn of(ty: NodeType) -> Shape {
        match ty {
            NodeType::P => Shape::Pentagon,
            NodeType::C => Shape::Triangle,
            NodeType::Pr | NodeType::O | NodeType::D => Shape::Hexagon,
            NodeType::A => Shape::Square,
            NodeType::R => Shape::Diamond,
            NodeType::E => Shape::Circle,
            NodeType::G => Shape::Ring,
        }
    }

    /// Graphviz shape name.
    pub fn dot(self) -> &'static str {
        match self {
            Shape::Pentagon => "pentagon",
            Shape::Triangle => "triangle",
            Shape::Hexagon => "hexagon",
            Shape::Square => "box",
            Shape::Diamond => "diamond",
            Shape::Circle => "circle",
            Shape::Ring => "doublecircle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeColor {
    Yellow,
    Blue,
    Green,
    LightBlue,
}

impl NodeColor {
    pub fn dot(self) -> &'static str {
        match self {
            NodeColor::Yellow => "yellow",
            NodeColor::Blue => "blue",
            NodeColor::Green => "green",
            NodeColor::LightBlue => "lightblue",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeColor {
    Gray,
    Green,
    Red,
}

impl EdgeColor {
    pub fn of(kind: EdgeKind) -> EdgeColor {
        match kind {
            EdgeKind::CPr(Auth::A) | EdgeKind::OG(Phase::I) | EdgeKind::DE(Phase::I) => EdgeColor::Green,
            EdgeKind::CPr(Auth::B) | EdgeKind::OG(Phase::F) | EdgeKind::DE(Phase::F) => EdgeColor::Red,
            _ => EdgeColor::Gray,
        }
    }

    pub fn dot(self) -> &'static str {
        match self {
            EdgeColor::Gray => "gray",
            EdgeColor::Green => "green",
            EdgeColor::Red => "red",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeVisual {
    pub shape: Shape,
    pub port_count: usize,
    pub port_labels: Vec<String>,
    pub color: NodeColor,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeVisual {
    pub color: EdgeColor,
}

/// Visual attributes of every visible element. Auxiliary edges have none.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Visuals {
    pub nodes: BTreeMap<NodeId, NodeVisual>,
    pub edges: BTreeMap<EdgeId, EdgeVisual>,
}

/// Which structures a node takes part in: `(permission, obligation)`.
///
/// A node belongs to a structure if it is incident to an edge of that side
/// (`CPr` and authorization `CC` for permissions; `CO`, `OPr`, `OG`, duty,
/// event and scheme edges and obligation `CC` for obligations), or if it is
/// one hop away from such a node over a shared `PC`, `PrA` or `PrR` edge.
pub fn membership(v: &TypedView) -> BTreeMap<NodeId, (bool, bool)> {
    let mut direct: BTreeMap<NodeId, (bool, bool)> = v.nodes.keys().map(|n| (*n, (false, false))).collect();
    let mut shared = Vec::new();
    for e in &v.edges {
        let (perm, obl) = match e.kind {
            EdgeKind::CC { auth, obl } => (auth, obl),
            k => match k.obligation_side() {
                Some(true) => (false, true),
                Some(false) => (true, false),
                None => {
                    shared.push(e.ends);
                    continue;
                }
            },
        };
        for n in e.ends {
            let m = direct.get_mut(&n).expect("typed node");
            m.0 |= perm;
            m.1 |= obl;
        }
    }
    let mut out = direct.clone();
    for [x, y] in shared {
        for (a, b) in [(x, y), (y, x)] {
            let (p, o) = direct[&b];
            let m = out.get_mut(&a).expect("typed node");
            m.0 |= p;
            m.1 |= o;
        }
    }
    out
}

pub fn port_labels(ty: NodeType) -> Vec<String> {
    ty.port_names().iter().map(|p| p.to_string()).collect()
}

/// Visual attributes of a well-formed graph.
pub fn compute_visuals(g: &PolicyGraph) -> Result<Visuals, PolicyError> {
    let violations = validate(g);
    if !violations.is_empty() {
        return Err(PolicyError::NotWellFormed(violations));
    }
    Ok(visuals_unchecked(&g.view()))
}

pub(crate) fn visuals_unchecked(v: &TypedView) -> Visuals {
    let member = membership(v);
    let nodes = v
        .nodes
        .iter()
        .map(|(n, t)| {
            let color = match (t.now, member[n]) {
                (true, _) => NodeColor::LightBlue,
                (false, (true, true)) => NodeColor::Green,
                (false, (false, true)) => NodeColor::Blue,
                (false, _) => NodeColor::Yellow,
            };
            let labels = port_labels(t.ty);
            (*n, NodeVisual { shape: Shape::of(t.ty), port_count: labels.len(), port_labels: labels, color })
        })
        .collect();
    let edges = v.edges.iter().map(|e| (e.id, EdgeVisual { color: EdgeColor::of(e.kind) })).collect();
    Visuals { nodes, edges }
}

/// Nodes of each colour, for reports.
pub fn color_classes(vis: &Visuals) -> BTreeMap<NodeColor, BTreeSet<NodeId>> {
    let mut out: BTreeMap<NodeColor, BTreeSet<NodeId>> = BTreeMap::new();
    for (n, nv) in &vis.nodes {
        out.entry(nv.color).or_default().insert(*n);
    }
    out
}
