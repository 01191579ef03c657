//! The policy-graph type system.
//!
//! A [`PolicyGraph`] is a [`PortGraph`] whose records follow a fixed typing:
//! every node has a `type` (one of [`NodeType`]) and an `ent`, every edge is
//! named after the unordered pair of its endpoint types (`PC`, `CC`, `CPr`,
//! ...). Categories, events and event schemes carry `In`/`Out` ports so that
//! the direction of `CC`, `EE` and `GG` edges is visible in the structure: the
//! edge attaches to `In` on the node(s) named in its `target`, `Out` elsewhere.
//!
//! On top of the typing this module provides typed paths ([`path_type`],
//! [`constrained_paths`]), redundancy detection, well-formedness validation,
//! extraction of the relational policy ([`extract_policy`]) and authorization
//! decisions ([`decide`]).

mod entity;
pub(crate) mod extract;
pub(crate) mod path;
mod rules;
mod typed;
pub(crate) mod validate;

pub use entity::{Auth, DutySpec, EdgeKind, EntityRef, GenericObligation, NodeType, Phase};
pub use extract::{decide, extract_policy, extract_unchecked, AuthorizationDecision, PolicyRelations, Verdict};
pub use path::{constrained_paths, format_word, path_type, shortest_constrained_path, CcSub, Dir, Letter, Path, Pattern};
pub use rules::aux_pc_rule;
pub use typed::{TypedEdge, TypedNode, TypedView};
pub use validate::{find_redundant_edges, validate, Violation};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::obligation::{Event, EventScheme};
use crate::portgraph::{EdgeId, NodeId, PortGraph, PortId, Record, Term, Value};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("unknown {kind} `{name}`")]
    UnknownEntity { kind: NodeType, name: String },

    #[error("node {0} does not exist or is not a policy node")]
    UnknownNode(NodeId),

    #[error("policy graph is not well-formed ({} violation(s))", .0.len())]
    NotWellFormed(Vec<Violation>),

    #[error("not a path: {0}")]
    NotAPath(String),

    #[error("bad path pattern: {0}")]
    BadPattern(String),

    #[error("cannot connect {0} and {1}: {2}")]
    BadEdge(NodeId, NodeId, String),
}

/// Edge attribute marking auxiliary (strategy-created) edges.
pub const AUX: &str = "aux";

/// A port graph carrying the policy typing.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PolicyGraph {
    graph: PortGraph,
}

impl From<PortGraph> for PolicyGraph {
    fn from(graph: PortGraph) -> Self {
        PolicyGraph { graph }
    }
}

impl PolicyGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn port_graph(&self) -> &PortGraph {
        &self.graph
    }

    pub fn into_port_graph(self) -> PortGraph {
        self.graph
    }

    /// The typed reading of the graph (auxiliary edges excluded).
    pub fn view(&self) -> TypedView {
        TypedView::build(&self.graph)
    }

    /// Add a node for an entity that carries no extra data (everything but
    /// events and event schemes, which go through [`Self::add_event`] and
    /// [`Self::add_scheme`]).
    pub fn add_node(&mut self, ent: EntityRef) -> NodeId {
        let ty = ent.node_type();
        let mut rec = base_node_record(ty, ent.to_value());
        match ty {
            NodeType::E => {
                rec = event_fields(rec, &Event::new(ent.name(), "", "", "", 0));
                rec.set("now", false);
            }
            NodeType::G => {
                rec.set("vars", Value::Tuple(Vec::new()));
                rec.set("pattern", Value::Tuple(Vec::new()));
            }
            _ => {}
        }
        self.insert_node(ty, rec)
    }

    pub fn add_event(&mut self, e: &Event, now: bool) -> NodeId {
        let rec = event_fields(base_node_record(NodeType::E, Value::str(&e.id)), e).with("now", now);
        self.insert_node(NodeType::E, rec)
    }

    pub fn add_scheme(&mut self, ge: &EventScheme) -> NodeId {
        let vars = ge.vars().iter().map(Value::str).collect();
        let pattern = ge
            .pattern()
            .iter()
            .map(|(k, t)| {
                let v = match t {
                    Term::Val(v) => v.clone(),
                    Term::Var { var } => Value::Str(format!("{}{var}", crate::obligation::VAR_PREFIX)),
                };
                Value::Tuple(vec![Value::str(k), v])
            })
            .collect();
        let rec = base_node_record(NodeType::G, Value::str(ge.name()))
            .with("vars", Value::Tuple(vars))
            .with("pattern", Value::Tuple(pattern));
        self.insert_node(NodeType::G, rec)
    }

    fn insert_node(&mut self, ty: NodeType, rec: Record) -> NodeId {
        let ports = ty.port_names().iter().map(|p| Record::new(*p));
        self.graph.add_node_with_ports(rec, ports).0
    }

    /// Connect two nodes. `CC`, `GG` and `EE` edges get `target = {b}`; use
    /// [`Self::connect_cc`] for other targets.
    pub fn connect(&mut self, a: NodeId, b: NodeId, kind: EdgeKind) -> Result<EdgeId, PolicyError> {
        let target: BTreeSet<NodeId> = if kind.has_target() { [b].into() } else { BTreeSet::new() };
        self.connect_with_target(a, b, kind, &target, false)
    }

    /// A `CC` edge with an arbitrary target set (a subset of `{a, b}`).
    pub fn connect_cc(
        &mut self,
        a: NodeId,
        b: NodeId,
        target: &[NodeId],
        auth: bool,
        obl: bool,
    ) -> Result<EdgeId, PolicyError> {
        let target = target.iter().copied().collect();
        self.connect_with_target(a, b, EdgeKind::CC { auth, obl }, &target, false)
    }

    /// Add an edge with explicit target set and `aux` flag.
    pub fn connect_with_target(
        &mut self,
        a: NodeId,
        b: NodeId,
        kind: EdgeKind,
        target: &BTreeSet<NodeId>,
        aux: bool,
    ) -> Result<EdgeId, PolicyError> {
        let bad = |why: &str| PolicyError::BadEdge(a, b, why.to_string());
        let (ta, tb) = (self.node_type(a).ok_or(bad("unknown node"))?, self.node_type(b).ok_or(bad("unknown node"))?);
        if EdgeKind::code_for(ta, tb) != Some(kind.code()) {
            return Err(bad(&format!("a {} edge cannot join {ta} and {tb}", kind.code())));
        }
        if target.iter().any(|t| *t != a && *t != b) {
            return Err(bad("target must be one of the endpoints"));
        }
        if matches!(kind, EdgeKind::GG | EdgeKind::EE) && target.len() != 1 {
            return Err(bad("GG and EE edges have exactly one target"));
        }
        let mut rec = edge_record(&kind, aux);
        if kind.has_target() {
            let ents: Vec<Value> = target.iter().map(|t| self.ent_value(*t).expect("node exists")).collect();
            match kind {
                EdgeKind::CC { .. } => rec.set("target", Value::Tuple(ents)),
                _ => rec.set("target", ents[0].clone()),
            }
        }
        let port = |n: NodeId| -> PortId {
            let name = if !kind.has_target() {
                "main"
            } else if target.contains(&n) {
                "In"
            } else {
                "Out"
            };
            self.port_named(n, name).expect("typed node has its ports")
        };
        let (pa, pb) = (port(a), port(b));
        Ok(self.graph.add_edge(pa, pb, rec).expect("ports exist"))
    }

    pub fn remove_edge(&mut self, e: EdgeId) -> bool {
        self.graph.remove_edge(e).is_some()
    }

    pub fn remove_node(&mut self, n: NodeId) -> bool {
        self.graph.remove_node(n).is_some()
    }

    pub fn port_named(&self, n: NodeId, name: &str) -> Option<PortId> {
        self.graph
            .node(n)?
            .ports
            .iter()
            .copied()
            .find(|p| self.graph.port(*p).and_then(|x| x.record.name()) == Some(name))
    }

    pub fn node_type(&self, n: NodeId) -> Option<NodeType> {
        NodeType::parse(self.graph.node(n)?.record.value("type")?.as_str()?)
    }

    fn ent_value(&self, n: NodeId) -> Option<Value> {
        self.graph.node(n)?.record.value("ent").cloned()
    }

    pub fn ent(&self, n: NodeId) -> Option<EntityRef> {
        EntityRef::from_value(self.node_type(n)?, &self.ent_value(n)?)
    }

    /// Node ids in id order.
    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.graph.nodes().map(|(n, _)| n)
    }

    /// The node representing `ent`, if any (first by id).
    pub fn find(&self, ent: &EntityRef) -> Option<NodeId> {
        let want = (ent.node_type(), ent.to_value());
        self.graph.nodes().find_map(|(n, node)| {
            let ty = NodeType::parse(node.record.value("type")?.as_str()?)?;
            (ty == want.0 && node.record.value("ent") == Some(&want.1)).then_some(n)
        })
    }

    pub fn nodes_of(&self, ty: NodeType) -> Vec<NodeId> {
        self.graph.nodes().filter(|(n, _)| self.node_type(*n) == Some(ty)).map(|(n, _)| n).collect()
    }

    /// The event stored on an `E` node.
    pub fn event(&self, n: NodeId) -> Option<Event> {
        if self.node_type(n)? != NodeType::E {
            return None;
        }
        let r = &self.graph.node(n)?.record;
        let s = |k: &str| r.value(k).and_then(Value::as_str).map(str::to_string);
        let extra = r
            .value("extra")
            .and_then(Value::as_tuple)
            .map(|items| {
                items
                    .iter()
                    .filter_map(|kv| match kv.as_tuple()? {
                        [Value::Str(k), v] => Some((k.clone(), v.clone())),
                        _ => None,
                    })
                    .collect()
            })
            .unwrap_or_default();
        Some(Event {
            id: s("ent")?,
            subj: s("subj")?,
            act: s("act")?,
            obj: s("obj")?,
            time: r.value("time")?.as_int()?,
            extra,
        })
    }

    /// The event scheme stored on a `G` node.
    pub fn scheme(&self, n: NodeId) -> Option<EventScheme> {
        if self.node_type(n)? != NodeType::G {
            return None;
        }
        let r = &self.graph.node(n)?.record;
        let name = r.value("ent")?.as_str()?.to_string();
        let vars = r
            .value("vars")?
            .as_tuple()?
            .iter()
            .filter_map(|v| v.as_str().map(str::to_string))
            .collect::<Vec<_>>();
        let mut pattern = BTreeMap::new();
        for kv in r.value("pattern")?.as_tuple()? {
            if let [Value::Str(k), v] = kv.as_tuple()? {
                let t = match v {
                    Value::Str(s) if s.starts_with(crate::obligation::VAR_PREFIX) => Term::var(&s[1..]),
                    _ => Term::Val(v.clone()),
                };
                pattern.insert(k.clone(), t);
            }
        }
        EventScheme::new(name, vars, pattern).ok()
    }

    pub fn is_now(&self, n: NodeId) -> bool {
        self.graph
            .node(n)
            .and_then(|x| x.record.value("now"))
            .and_then(Value::as_bool)
            .unwrap_or(false)
    }

    /// The `E` node with `now = ⊤`, if exactly one exists.
    pub fn now_node(&self) -> Option<NodeId> {
        let mut it = self.nodes_of(NodeType::E).into_iter().filter(|n| self.is_now(*n));
        let first = it.next()?;
        it.next().is_none().then_some(first)
    }

    /// Move the `now` marker to `n` (or clear it).
    pub fn set_now(&mut self, n: Option<NodeId>) {
        for e in self.nodes_of(NodeType::E) {
            let on = Some(e) == n;
            if let Some(r) = self.graph.node_record_mut(e) {
                r.set("now", on);
            }
        }
    }

    /// Replace the entity of a node, keeping its type and edges.
    pub fn set_ent(&mut self, n: NodeId, ent: &EntityRef) -> Result<(), PolicyError> {
        if self.node_type(n) != Some(ent.node_type()) {
            return Err(PolicyError::UnknownNode(n));
        }
        let r = self.graph.node_record_mut(n).ok_or(PolicyError::UnknownNode(n))?;
        r.set("ent", ent.to_value());
        Ok(())
    }

    /// Edge ids marked auxiliary.
    pub fn aux_edges(&self) -> BTreeSet<EdgeId> {
        self.graph
            .edges()
            .filter(|(_, e)| e.record.value(AUX).and_then(Value::as_bool) == Some(true))
            .map(|(id, _)| id)
            .collect()
    }

    /// Nodes at the two ends of an edge.
    pub fn edge_nodes(&self, e: EdgeId) -> Option<[NodeId; 2]> {
        self.graph.edge_nodes(e)
    }
}

fn base_node_record(ty: NodeType, ent: Value) -> Record {
    Record::new(ty.code()).with("type", ty.code()).with("ent", ent)
}

fn event_fields(rec: Record, e: &Event) -> Record {
    let extra = e
        .extra
        .iter()
        .map(|(k, v)| Value::Tuple(vec![Value::str(k), v.clone()]))
        .collect();
    rec.with("subj", e.subj.as_str())
        .with("act", e.act.as_str())
        .with("obj", e.obj.as_str())
        .with("time", e.time)
        .with("extra", Value::Tuple(extra))
}

fn edge_record(kind: &EdgeKind, aux: bool) -> Record {
    let code = kind.code();
    let r = Record::new(code).with("type", code).with(AUX, aux);
    match kind {
        EdgeKind::CC { auth, obl } => r.with("auth", *auth).with("obl", *obl),
        EdgeKind::CPr(a) => r.with("auth", a.code()),
        EdgeKind::OG(p) => r.with("ge", p.code()),
        EdgeKind::DE(p) => r.with("ev", p.code()),
        _ => r,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ports_follow_the_type() {
        let mut g = PolicyGraph::new();
        let p = g.add_node(EntityRef::Principal("p".into()));
        let c = g.add_node(EntityRef::Category("c".into()));
        assert_eq!(g.port_graph().node(p).unwrap().ports.len(), 1);
        assert_eq!(g.port_graph().node(c).unwrap().ports.len(), 3);
        assert!(g.port_named(c, "In").is_some());
    }

    #[test]
    fn cc_edges_attach_in_and_out() {
        let mut g = PolicyGraph::new();
        let c1 = g.add_node(EntityRef::Category("c1".into()));
        let c2 = g.add_node(EntityRef::Category("c2".into()));
        let e = g.connect(c1, c2, EdgeKind::CC { auth: true, obl: false }).unwrap();
        let edge = g.port_graph().edge(e).unwrap();
        let mut ends = edge.ends.to_vec();
        ends.sort();
        let mut want = vec![g.port_named(c1, "Out").unwrap(), g.port_named(c2, "In").unwrap()];
        want.sort();
        assert_eq!(ends, want);
        assert_eq!(edge.record.value("target"), Some(&Value::Tuple(vec![Value::str("c2")])));
    }

    #[test]
    fn wrong_endpoint_types_rejected() {
        let mut g = PolicyGraph::new();
        let p = g.add_node(EntityRef::Principal("p".into()));
        let a = g.add_node(EntityRef::Action("a".into()));
        assert!(g.connect(p, a, EdgeKind::PC).is_err());
    }

    #[test]
    fn events_and_schemes_round_trip_through_records() {
        let mut g = PolicyGraph::new();
        let mut e = Event::new("e1", "s", "Read", "o", 7);
        e.extra.insert("site".into(), Value::str("A"));
        let n = g.add_event(&e, true);
        assert_eq!(g.event(n), Some(e));
        assert_eq!(g.now_node(), Some(n));

        let mut pat = BTreeMap::new();
        pat.insert("subj".to_string(), Term::var("X"));
        pat.insert("act".to_string(), Term::Val(Value::str("Read")));
        let ge = EventScheme::new("g[X]", vec!["X".into()], pat).unwrap();
        let m = g.add_scheme(&ge);
        assert_eq!(g.scheme(m), Some(ge));
    }
}
