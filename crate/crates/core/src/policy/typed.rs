use std::collections::{BTreeMap, BTreeSet};

use super::entity::{Auth, EdgeKind, EntityRef, NodeType, Phase};
use super::validate::Violation;
use super::AUX;
use crate::portgraph::{EdgeId, NodeId, PortGraph, Record, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedNode {
    pub ty: NodeType,
    pub ent: EntityRef,
    pub now: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedEdge {
    pub id: EdgeId,
    pub ends: [NodeId; 2],
    pub kind: EdgeKind,
    /// Endpoints named by the `target` attribute (`CC`, `GG`, `EE` only).
    pub target: BTreeSet<NodeId>,
}

impl TypedEdge {
    pub fn other(&self, n: NodeId) -> NodeId {
        if self.ends[0] == n {
            self.ends[1]
        } else {
            self.ends[0]
        }
    }

    /// Whether the edge can be walked from `from` to `to` under a
    /// constrained (`inverse = false`) or inverse constrained path. Edges
    /// without a target can always be walked.
    pub fn walkable(&self, from: NodeId, to: NodeId, inverse: bool) -> bool {
        if !self.kind.has_target() {
            return true;
        }
        self.target.contains(if inverse { &from } else { &to })
    }
}

/// The typed reading of a policy graph: nodes and edges with parsed
/// attributes, adjacency, and the typing errors found on the way.
/// Auxiliary edges are left out.
#[derive(Debug, Clone, Default)]
pub struct TypedView {
    pub nodes: BTreeMap<NodeId, TypedNode>,
    pub edges: Vec<TypedEdge>,
    pub adj: BTreeMap<NodeId, Vec<usize>>,
    pub errors: Vec<Violation>,
}

impl TypedView {
    pub fn build(g: &PortGraph) -> TypedView {
        let mut v = TypedView::default();
        for (n, node) in g.nodes() {
            match typed_node(&node.record) {
                Ok(t) => {
                    let want = t.ty.port_names();
                    let have: Vec<&str> = node
                        .ports
                        .iter()
                        .map(|p| g.port(*p).and_then(|x| x.record.name()).unwrap_or(""))
                        .collect();
                    if have != want {
                        v.errors.push(Violation::IllTypedNode {
                            node: n,
                            reason: format!("ports {have:?}, expected {want:?}"),
                        });
                    }
                    v.nodes.insert(n, t);
                    v.adj.insert(n, Vec::new());
                }
                Err(reason) => v.errors.push(Violation::IllTypedNode { node: n, reason }),
            }
        }
        for (id, edge) in g.edges() {
            if edge.record.value(AUX).and_then(Value::as_bool) == Some(true) {
                continue;
            }
            let Some(ends) = g.edge_nodes(id) else { continue };
            let (Some(a), Some(b)) = (v.nodes.get(&ends[0]), v.nodes.get(&ends[1])) else {
                // the node error is already reported
                continue;
            };
            match typed_edge(&edge.record, ends, a, b) {
                Ok((kind, target)) => {
                    let port_ok = edge.ends.iter().all(|p| {
                        let port = g.port(*p).expect("consistent graph");
                        let name = port.record.name().unwrap_or("");
                        let want = if !kind.has_target() {
                            "main"
                        } else if target.contains(&port.node) {
                            "In"
                        } else {
                            "Out"
                        };
                        name == want
                    });
                    if !port_ok {
                        v.errors.push(Violation::IllTypedEdge {
                            edge: id,
                            reason: "attached to the wrong ports for its target".into(),
                        });
                    }
                    let i = v.edges.len();
                    v.edges.push(TypedEdge { id, ends, kind, target });
                    v.adj.get_mut(&ends[0]).expect("node").push(i);
                    if ends[1] != ends[0] {
                        v.adj.get_mut(&ends[1]).expect("node").push(i);
                    }
                }
                Err(reason) => v.errors.push(Violation::IllTypedEdge { edge: id, reason }),
            }
        }
        v
    }

    pub fn ty(&self, n: NodeId) -> Option<NodeType> {
        self.nodes.get(&n).map(|t| t.ty)
    }

    pub fn ent(&self, n: NodeId) -> Option<&EntityRef> {
        self.nodes.get(&n).map(|t| &t.ent)
    }

    /// Incident edges of `n`.
    pub fn incident(&self, n: NodeId) -> impl Iterator<Item = &TypedEdge> + '_ {
        self.adj.get(&n).into_iter().flatten().map(|i| &self.edges[*i])
    }

    pub fn of_type(&self, ty: NodeType) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().filter(move |(_, t)| t.ty == ty).map(|(n, _)| *n)
    }

    pub fn find(&self, ent: &EntityRef) -> Option<NodeId> {
        self.nodes.iter().find(|(_, t)| &t.ent == ent).map(|(n, _)| *n)
    }

    /// Entity names of the nodes of one type.
    pub fn names(&self, ty: NodeType) -> BTreeSet<String> {
        self.of_type(ty).map(|n| self.nodes[&n].ent.name()).collect()
    }
}

fn typed_node(r: &Record) -> Result<TypedNode, String> {
    let code = r.value("type").and_then(Value::as_str).ok_or("missing `type`")?;
    let ty = NodeType::parse(code).ok_or_else(|| format!("unknown node type `{code}`"))?;
    if r.name() != Some(ty.code()) {
        return Err(format!("record name {:?} differs from type {}", r.name(), ty.code()));
    }
    let ent_v = r.value("ent").ok_or("missing `ent`")?;
    let ent = EntityRef::from_value(ty, ent_v).ok_or_else(|| format!("`ent` {ent_v} does not fit type {}", ty.code()))?;
    let now = match r.value("now") {
        Some(Value::Bool(b)) => *b,
        Some(v) => return Err(format!("`now` must be boolean, got {v}")),
        None => false,
    };
    if now && ty != NodeType::E {
        return Err("only event nodes carry `now`".into());
    }
    Ok(TypedNode { ty, ent, now })
}

fn typed_edge(
    r: &Record,
    ends: [NodeId; 2],
    a: &TypedNode,
    b: &TypedNode,
) -> Result<(EdgeKind, BTreeSet<NodeId>), String> {
    let want = EdgeKind::code_for(a.ty, b.ty)
        .ok_or_else(|| format!("no edge type joins {} and {}", a.ty.code(), b.ty.code()))?;
    let name = r.name().unwrap_or("");
    if name != want || r.value("type").and_then(Value::as_str) != Some(want) {
        return Err(format!("edge named `{name}` joins {} and {}, expected {want}", a.ty.code(), b.ty.code()));
    }
    let flag = |k: &str| r.value(k).and_then(Value::as_bool).ok_or_else(|| format!("`{k}` must be ⊤ or ⊥"));
    let phase = |k: &str| {
        r.value(k)
            .and_then(Value::as_str)
            .and_then(Phase::parse)
            .ok_or_else(|| format!("`{k}` must be i or f"))
    };
    // (typed endpoint, its node) in "first type" order for the ent checks
    let (first, second) = ordered(want, a, b);
    let mut target = BTreeSet::new();
    let kind = match want {
        "PC" => EdgeKind::PC,
        "CC" => {
            let items = r.value("target").and_then(Value::as_tuple).ok_or("`target` must be a tuple")?;
            for t in items {
                let hit = resolve(t, ends, a, b).ok_or_else(|| format!("target {t} is not an endpoint"))?;
                target.extend(hit);
            }
            EdgeKind::CC { auth: flag("auth")?, obl: flag("obl")? }
        }
        "GG" | "EE" => {
            let t = r.value("target").ok_or("missing `target`")?;
            target = resolve(t, ends, a, b).ok_or_else(|| format!("target {t} is not an endpoint"))?;
            if want == "GG" {
                EdgeKind::GG
            } else {
                EdgeKind::EE
            }
        }
        "CPr" => match r.value("auth").and_then(Value::as_str) {
            Some("A") => EdgeKind::CPr(Auth::A),
            Some("B") => EdgeKind::CPr(Auth::B),
            _ => return Err("`auth` must be A or B".into()),
        },
        "CO" => EdgeKind::CO,
        "PrA" | "PrR" => {
            let EntityRef::Permission { action, resource } = &first.ent else { unreachable!() };
            let want_ent = if want == "PrA" { action } else { resource };
            if &second.ent.name() != want_ent {
                return Err(format!("permission {} does not mention {}", first.ent, second.ent));
            }
            if want == "PrA" {
                EdgeKind::PrA
            } else {
                EdgeKind::PrR
            }
        }
        "OPr" => {
            let (EntityRef::Obligation(o), EntityRef::Permission { action, resource }) = (&first.ent, &second.ent)
            else {
                unreachable!()
            };
            if (&o.action, &o.resource) != (action, resource) {
                return Err(format!("obligation {o} is not about permission {}", second.ent));
            }
            EdgeKind::OPr
        }
        "OG" => {
            let EntityRef::Obligation(o) = &first.ent else { unreachable!() };
            let p = phase("ge")?;
            let slot = if p == Phase::I { &o.start } else { &o.end };
            if slot.as_deref() != Some(second.ent.name().as_str()) {
                return Err(format!("scheme {} is not the {} scheme of {o}", second.ent, p.code()));
            }
            EdgeKind::OG(p)
        }
        "DP" | "DPr" => {
            let EntityRef::Duty(d) = &first.ent else { unreachable!() };
            let ok = match &second.ent {
                EntityRef::Principal(p) => *p == d.principal,
                EntityRef::Permission { action, resource } => (action, resource) == (&d.action, &d.resource),
                _ => false,
            };
            if !ok {
                return Err(format!("duty {d} does not mention {}", second.ent));
            }
            if want == "DP" {
                EdgeKind::DP
            } else {
                EdgeKind::DPr
            }
        }
        "DE" => {
            let EntityRef::Duty(d) = &first.ent else { unreachable!() };
            let p = phase("ev")?;
            let slot = if p == Phase::I { &d.start } else { &d.end };
            if slot.as_deref() != Some(second.ent.name().as_str()) {
                return Err(format!("event {} is not the {} event of {d}", second.ent, p.code()));
            }
            EdgeKind::DE(p)
        }
        "EP" => EdgeKind::EP,
        "EA" => EdgeKind::EA,
        "ER" => EdgeKind::ER,
        "EG" => EdgeKind::EG,
        _ => unreachable!("code_for covers every pair"),
    };
    Ok((kind, target))
}

/// Endpoints in the order the edge type name lists them (`PrA`: Pr first).
fn ordered<'a>(code: &str, a: &'a TypedNode, b: &'a TypedNode) -> (&'a TypedNode, &'a TypedNode) {
    let lead = match code {
        "PrA" | "PrR" => NodeType::Pr,
        "OPr" | "OG" => NodeType::O,
        "DP" | "DPr" | "DE" => NodeType::D,
        "EP" | "EA" | "ER" | "EG" | "EE" => NodeType::E,
        "CPr" | "CO" | "CC" => NodeType::C,
        "GG" => NodeType::G,
        _ => NodeType::P,
    };
    if a.ty == lead {
        (a, b)
    } else {
        (b, a)
    }
}

fn resolve(t: &Value, ends: [NodeId; 2], a: &TypedNode, b: &TypedNode) -> Option<BTreeSet<NodeId>> {
    let mut out = BTreeSet::new();
    if a.ent.to_value() == *t {
        out.insert(ends[0]);
    }
    if b.ent.to_value() == *t {
        out.insert(ends[1]);
    }
    (!out.is_empty()).then_some(out)
}
