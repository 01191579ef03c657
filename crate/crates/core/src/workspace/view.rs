use std::collections::BTreeSet;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::visual::{visuals_unchecked, EdgeVisual, NodeVisual};
use super::WorkspaceError;
use crate::policy::{EntityRef, NodeType, PolicyGraph, AUX};
use crate::portgraph::{EdgeId, NodeId, PortId, Record, Value};

/// `attr == value` on a node or edge record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttrMatch {
    pub attr: String,
    pub value: Value,
}

impl AttrMatch {
    pub fn new(attr: impl Into<String>, value: impl Into<Value>) -> Self {
        AttrMatch { attr: attr.into(), value: value.into() }
    }

    fn matches(&self, r: &Record) -> bool {
        r.value(&self.attr) == Some(&self.value)
    }
}

/// What a view leaves out. Filters only affect rendering and exports;
/// extraction and decisions always see the whole graph.
///
/// Auxiliary edges are always hidden, and so is every edge at a hidden node.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewFilter {
    /// Nodes and edges whose record matches any entry are hidden.
    #[serde(default)]
    pub hide: Vec<AttrMatch>,
    /// Nodes hidden by id.
    #[serde(default)]
    pub hidden: BTreeSet<NodeId>,
}

impl ViewFilter {
    /// Parse a view specification: empty or `all` shows everything,
    /// `authorization` hides the obligation and event machinery,
    /// `obligation` hides permission and ban edges, and otherwise a
    /// comma-separated list of `attr=value` entries to hide.
    pub fn parse(spec: &str) -> Result<ViewFilter, WorkspaceError> {
        let spec = spec.trim();
        let types = |ts: &[&str], attr: &str| ViewFilter {
            hide: ts.iter().map(|t| AttrMatch::new(attr, *t)).collect(),
            hidden: BTreeSet::new(),
        };
        match spec {
            "" | "all" => return Ok(ViewFilter::default()),
            "authorization" => return Ok(types(&["O", "D", "E", "G"], "type")),
            "obligation" => return Ok(types(&["CPr"], "type")),
            _ => {}
        }
        let mut f = ViewFilter::default();
        for item in spec.split(',') {
            let Some((attr, value)) = item.split_once('=') else {
                return Err(WorkspaceError::BadView(spec.to_string()));
            };
            let (attr, value) = (attr.trim(), value.trim());
            if attr.is_empty() {
                return Err(WorkspaceError::BadView(spec.to_string()));
            }
            let value = match value {
                "true" => Value::Bool(true),
                "false" => Value::Bool(false),
                v => v.parse::<i64>().map_or_else(|_| Value::str(v), Value::Int),
            };
            f.hide.push(AttrMatch { attr: attr.to_string(), value });
        }
        Ok(f)
    }

    pub fn hides_node(&self, g: &PolicyGraph, n: NodeId) -> bool {
        self.hidden.contains(&n)
            || g.port_graph().node(n).is_none_or(|x| self.hide.iter().any(|m| m.matches(&x.record)))
    }

    pub fn hides_edge(&self, g: &PolicyGraph, e: EdgeId) -> bool {
        let Some(edge) = g.port_graph().edge(e) else { return true };
        if edge.record.value(AUX).and_then(Value::as_bool) == Some(true) {
            return true;
        }
        if self.hide.iter().any(|m| m.matches(&edge.record)) {
            return true;
        }
        g.edge_nodes(e).is_none_or(|ends| ends.iter().any(|n| self.hides_node(g, *n)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortExport {
    pub id: PortId,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeExport {
    pub id: NodeId,
    #[serde(rename = "type")]
    pub ty: NodeType,
    pub label: String,
    pub ent: EntityRef,
    pub now: bool,
    pub ports: Vec<PortExport>,
    pub visual: NodeVisual,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeExport {
    pub id: EdgeId,
    #[serde(rename = "type")]
    pub ty: String,
    /// For directed edges (`CC`, `GG`, `EE` with a single target), the
    /// source is the non-target end.
    pub source: NodeId,
    pub target: NodeId,
    pub source_port: PortId,
    pub target_port: PortId,
    pub directed: bool,
    pub record: Record,
    pub visual: EdgeVisual,
}

/// A rendered view of a policy graph.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphExport {
    pub nodes: Vec<NodeExport>,
    pub edges: Vec<EdgeExport>,
}

/// The visible part of a graph with its visual attributes. Ill-typed
/// elements are left out.
pub fn export_view(g: &PolicyGraph, filter: &ViewFilter) -> GraphExport {
    let v = g.view();
    let vis = visuals_unchecked(&v);
    let pg = g.port_graph();
    let mut out = GraphExport::default();
    for (n, t) in &v.nodes {
        if filter.hides_node(g, *n) {
            continue;
        }
        let node = pg.node(*n).expect("typed node exists");
        let ports = node
            .ports
            .iter()
            .map(|p| PortExport { id: *p, label: pg.port(*p).and_then(|x| x.record.name()).unwrap_or("").to_string() })
            .collect();
        out.nodes.push(NodeExport {
            id: *n,
            ty: t.ty,
            label: t.ent.to_string(),
            ent: t.ent.clone(),
            now: t.now,
            ports,
            visual: vis.nodes[n].clone(),
        });
    }
    for e in &v.edges {
        if filter.hides_edge(g, e.id) {
            continue;
        }
        let edge = pg.edge(e.id).expect("typed edge exists");
        let node_of = |p: PortId| pg.port(p).expect("port exists").node;
        let [p0, p1] = edge.ends;
        let directed = e.target.len() == 1 && e.ends[0] != e.ends[1];
        let (sp, tp) = if directed && e.target.contains(&node_of(p0)) { (p1, p0) } else { (p0, p1) };
        out.edges.push(EdgeExport {
            id: e.id,
            ty: e.kind.code().to_string(),
            source: node_of(sp),
            target: node_of(tp),
            source_port: sp,
            target_port: tp,
            directed,
            record: edge.record.clone(),
            visual: vis.edges[&e.id].clone(),
        });
    }
    out
}

pub fn export_json(g: &PolicyGraph, filter: &ViewFilter) -> String {
    serde_json::to_string_pretty(&export_view(g, filter)).expect("exports serialize")
}

fn quote(s: &str) -> String {
    let mut o = String::with_capacity(s.len() + 2);
    o.push('"');
    for c in s.chars() {
        match c {
            '"' | '\\' => {
                o.push('\\');
                o.push(c);
            }
            '\n' => o.push_str("\\n"),
            c => o.push(c),
        }
    }
    o.push('"');
    o
}

/// Graphviz rendering of the visible part of a graph.
pub fn export_dot(g: &PolicyGraph, filter: &ViewFilter) -> String {
    let view = export_view(g, filter);
    let mut out = String::from("graph policy {\n  node [style=filled];\n");
    for n in &view.nodes {
        let _ = writeln!(
            out,
            "  {} [label={}, shape={}, fillcolor={}];",
            n.id,
            quote(&n.label),
            n.visual.shape.dot(),
            n.visual.color.dot()
        );
    }
    for e in &view.edges {
        let dir = if e.directed { ", dir=forward" } else { "" };
        let _ = writeln!(
            out,
            "  {} -- {} [label={}, color={}{dir}];",
            e.source,
            e.target,
            quote(&e.ty),
            e.visual.color.dot()
        );
    }
    out.push_str("}\n");
    out
}
