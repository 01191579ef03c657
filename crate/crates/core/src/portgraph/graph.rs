use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::record::{Record, Value, STRUCTURAL_ATTRS};
use super::PortGraphError;

macro_rules! id_type {
    ($name:ident, $prefix:literal) => {
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_type!(NodeId, "n");
id_type!(PortId, "p");
id_type!(EdgeId, "e");

/// Any element of a port graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "lowercase")]
pub enum Elem {
    Node(NodeId),
    Port(PortId),
    Edge(EdgeId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub record: Record,
    pub ports: Vec<PortId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Port {
    pub node: NodeId,
    pub record: Record,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub ends: [PortId; 2],
    pub record: Record,
}

impl Edge {
    /// The port at the other end of the edge, seen from `from`.
    pub fn opposite(&self, from: PortId) -> PortId {
        if self.ends[0] == from {
            self.ends[1]
        } else {
            self.ends[0]
        }
    }
}

/// An attributed graph whose edges attach to nodes at ports.
///
/// Element ids are drawn from one counter, so a node, a port and an edge never
/// share a numeric id. Ids are never reused after removal.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "GraphRepr", into = "GraphRepr")]
pub struct PortGraph {
    nodes: BTreeMap<NodeId, Node>,
    ports: BTreeMap<PortId, Port>,
    edges: BTreeMap<EdgeId, Edge>,
    incidence: BTreeMap<PortId, BTreeSet<EdgeId>>,
    next_id: u32,
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    nodes: BTreeMap<NodeId, Node>,
    ports: BTreeMap<PortId, Port>,
    edges: BTreeMap<EdgeId, Edge>,
    #[serde(default)]
    next_id: u32,
}

impl From<GraphRepr> for PortGraph {
    fn from(r: GraphRepr) -> Self {
        let mut g = PortGraph {
            nodes: r.nodes,
            ports: r.ports,
            edges: r.edges,
            incidence: BTreeMap::new(),
            next_id: r.next_id,
        };
        g.reindex();
        g
    }
}

impl From<PortGraph> for GraphRepr {
    fn from(g: PortGraph) -> Self {
        GraphRepr { nodes: g.nodes, ports: g.ports, edges: g.edges, next_id: g.next_id }
    }
}

impl PortGraph {
    pub fn new() -> Self {
        Self::default()
    }

    fn fresh(&mut self) -> u32 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    pub fn add_node(&mut self, record: Record) -> NodeId {
        let id = NodeId(self.fresh());
        self.nodes.insert(id, Node { record, ports: Vec::new() });
        id
    }

    pub fn add_port(&mut self, node: NodeId, record: Record) -> Result<PortId, PortGraphError> {
        if !self.nodes.contains_key(&node) {
            return Err(PortGraphError::MissingElement(Elem::Node(node)));
        }
        let id = PortId(self.fresh());
        self.ports.insert(id, Port { node, record });
        self.incidence.insert(id, BTreeSet::new());
        self.nodes.get_mut(&node).expect("checked above").ports.push(id);
        Ok(id)
    }

    /// Add a node together with its interface, returning the port ids in the
    /// order given.
    pub fn add_node_with_ports<I>(&mut self, record: Record, ports: I) -> (NodeId, Vec<PortId>)
    where
        I: IntoIterator<Item = Record>,
    {
        let n = self.add_node(record);
        let ps = ports
            .into_iter()
            .map(|r| self.add_port(n, r).expect("node just created"))
            .collect();
        (n, ps)
    }

    pub fn add_edge(&mut self, a: PortId, b: PortId, record: Record) -> Result<EdgeId, PortGraphError> {
        for p in [a, b] {
            if !self.ports.contains_key(&p) {
                return Err(PortGraphError::MissingElement(Elem::Port(p)));
            }
        }
        let id = EdgeId(self.fresh());
        self.edges.insert(id, Edge { ends: [a, b], record });
        self.incidence.entry(a).or_default().insert(id);
        self.incidence.entry(b).or_default().insert(id);
        Ok(id)
    }

    pub fn remove_edge(&mut self, e: EdgeId) -> Option<Edge> {
        let edge = self.edges.remove(&e)?;
        for p in edge.ends {
            if let Some(s) = self.incidence.get_mut(&p) {
                s.remove(&e);
            }
        }
        Some(edge)
    }

    /// Remove a node, its ports and every edge attached to them.
    pub fn remove_node(&mut self, n: NodeId) -> Option<Node> {
        let node = self.nodes.remove(&n)?;
        for p in &node.ports {
            let incident: Vec<EdgeId> = self.incidence.get(p).into_iter().flatten().copied().collect();
            for e in incident {
                self.remove_edge(e);
            }
            self.ports.remove(p);
            self.incidence.remove(p);
        }
        Some(node)
    }

    pub fn node(&self, n: NodeId) -> Option<&Node> {
        self.nodes.get(&n)
    }

    pub fn port(&self, p: PortId) -> Option<&Port> {
        self.ports.get(&p)
    }

    pub fn edge(&self, e: EdgeId) -> Option<&Edge> {
        self.edges.get(&e)
    }

    pub fn node_record_mut(&mut self, n: NodeId) -> Option<&mut Record> {
        self.nodes.get_mut(&n).map(|x| &mut x.record)
    }

    pub fn edge_record_mut(&mut self, e: EdgeId) -> Option<&mut Record> {
        self.edges.get_mut(&e).map(|x| &mut x.record)
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &Node)> {
        self.nodes.iter().map(|(k, v)| (*k, v))
    }

    pub fn ports(&self) -> impl Iterator<Item = (PortId, &Port)> {
        self.ports.iter().map(|(k, v)| (*k, v))
    }

    pub fn edges(&self) -> impl Iterator<Item = (EdgeId, &Edge)> {
        self.edges.iter().map(|(k, v)| (*k, v))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn port_count(&self) -> usize {
        self.ports.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.ports.is_empty() && self.edges.is_empty()
    }

    pub fn contains(&self, elem: Elem) -> bool {
        match elem {
            Elem::Node(n) => self.nodes.contains_key(&n),
            Elem::Port(p) => self.ports.contains_key(&p),
            Elem::Edge(e) => self.edges.contains_key(&e),
        }
    }

    /// Edges attached to port `p`.
    pub fn port_edges(&self, p: PortId) -> impl Iterator<Item = EdgeId> + '_ {
        self.incidence.get(&p).into_iter().flatten().copied()
    }

    pub fn arity(&self, p: PortId) -> usize {
        self.incidence.get(&p).map_or(0, BTreeSet::len)
    }

    /// Edges attached to any port of node `n`.
    pub fn node_edges(&self, n: NodeId) -> BTreeSet<EdgeId> {
        self.nodes
            .get(&n)
            .into_iter()
            .flat_map(|node| node.ports.iter())
            .flat_map(|p| self.port_edges(*p))
            .collect()
    }

    /// Nodes at the two ends of an edge.
    pub fn edge_nodes(&self, e: EdgeId) -> Option<[NodeId; 2]> {
        let edge = self.edges.get(&e)?;
        let a = self.ports.get(&edge.ends[0])?.node;
        let b = self.ports.get(&edge.ends[1])?.node;
        Some([a, b])
    }

    /// The full label of an element, including the structural attributes
    /// `Interface`, `Attach`, `Arity` and `Connect`.
    pub fn label(&self, elem: Elem) -> Option<Record> {
        match elem {
            Elem::Node(n) => {
                let node = self.nodes.get(&n)?;
                let iface = node.ports.iter().map(|p| Value::Int(p.0 as i64)).collect();
                Some(node.record.clone().with("Interface", Value::Tuple(iface)))
            }
            Elem::Port(p) => {
                let port = self.ports.get(&p)?;
                Some(
                    port.record
                        .clone()
                        .with("Attach", Value::Int(port.node.0 as i64))
                        .with("Arity", Value::Int(self.arity(p) as i64)),
                )
            }
            Elem::Edge(e) => {
                let edge = self.edges.get(&e)?;
                let mut ends = [edge.ends[0].0 as i64, edge.ends[1].0 as i64];
                ends.sort();
                Some(edge.record.clone().with(
                    "Connect",
                    Value::Tuple(ends.iter().map(|x| Value::Int(*x)).collect()),
                ))
            }
        }
    }

    /// Rebuild the port → edge incidence index (needed after deserializing).
    pub fn reindex(&mut self) {
        self.incidence = self.ports.keys().map(|p| (*p, BTreeSet::new())).collect();
        for (id, e) in &self.edges {
            for p in e.ends {
                self.incidence.entry(p).or_default().insert(*id);
            }
        }
        let max = self
            .nodes
            .keys()
            .map(|x| x.0)
            .chain(self.ports.keys().map(|x| x.0))
            .chain(self.edges.keys().map(|x| x.0))
            .max();
        if let Some(m) = max {
            self.next_id = self.next_id.max(m + 1);
        }
    }

    /// Check the structural invariants: every port's `Attach` node lists it in
    /// its `Interface` (and vice versa), every edge connects two existing
    /// ports, `Arity` agrees with the edge set, structural attributes are not
    /// shadowed by stored records, and records sharing a `Name` share an
    /// attribute set.
    pub fn check_invariants(&self) -> Result<(), Vec<String>> {
        let mut errs = Vec::new();
        for (n, node) in &self.nodes {
            for p in &node.ports {
                match self.ports.get(p) {
                    Some(port) if port.node == *n => {}
                    Some(port) => errs.push(format!("{p} listed by {n} but attached to {}", port.node)),
                    None => errs.push(format!("{n} lists missing port {p}")),
                }
            }
        }
        for (p, port) in &self.ports {
            match self.nodes.get(&port.node) {
                Some(node) if node.ports.contains(p) => {}
                _ => errs.push(format!("{p} attached to {} which does not list it", port.node)),
            }
            let counted = self.edges.values().filter(|e| e.ends.contains(p)).count();
            if counted != self.arity(*p) {
                errs.push(format!("{p} arity {} but {counted} edges connect it", self.arity(*p)));
            }
        }
        for (e, edge) in &self.edges {
            for p in edge.ends {
                if !self.ports.contains_key(&p) {
                    errs.push(format!("{e} dangles on missing port {p}"));
                }
            }
        }
        let mut by_name: BTreeMap<(u8, String), BTreeSet<String>> = BTreeMap::new();
        let records = self
            .nodes
            .values()
            .map(|x| (0u8, &x.record))
            .chain(self.ports.values().map(|x| (1u8, &x.record)))
            .chain(self.edges.values().map(|x| (2u8, &x.record)));
        for (kind, r) in records {
            for s in STRUCTURAL_ATTRS {
                if r.get(s).is_some() {
                    errs.push(format!("record {r} stores structural attribute {s}"));
                }
            }
            let Some(name) = r.name() else {
                errs.push(format!("record {r} has no Name"));
                continue;
            };
            let attrs: BTreeSet<String> = r.attributes().into_iter().map(str::to_string).collect();
            match by_name.get(&(kind, name.to_string())) {
                Some(prev) if *prev != attrs => {
                    errs.push(format!("records named {name} disagree on attributes"))
                }
                Some(_) => {}
                None => {
                    by_name.insert((kind, name.to_string()), attrs);
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    /// Copy `other` into `self` with fresh ids. Returns the id translation.
    pub fn absorb(&mut self, other: &PortGraph) -> BTreeMap<Elem, Elem> {
        let mut map = BTreeMap::new();
        let mut port_map = BTreeMap::new();
        for (n, node) in other.nodes() {
            let nn = self.add_node(node.record.clone());
            map.insert(Elem::Node(n), Elem::Node(nn));
            for p in &node.ports {
                let port = other.port(*p).expect("consistent graph");
                let np = self.add_port(nn, port.record.clone()).expect("node exists");
                port_map.insert(*p, np);
                map.insert(Elem::Port(*p), Elem::Port(np));
            }
        }
        for (e, edge) in other.edges() {
            let ne = self
                .add_edge(port_map[&edge.ends[0]], port_map[&edge.ends[1]], edge.record.clone())
                .expect("ports exist");
            map.insert(Elem::Edge(e), Elem::Edge(ne));
        }
        map
    }
}

/// A set of graph elements, used for position and banned subgraphs and for
/// the sets manipulated by strategies.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Subgraph {
    pub nodes: BTreeSet<NodeId>,
    pub ports: BTreeSet<PortId>,
    pub edges: BTreeSet<EdgeId>,
}

impl Subgraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every element of `g`.
    pub fn whole(g: &PortGraph) -> Self {
        Subgraph {
            nodes: g.nodes.keys().copied().collect(),
            ports: g.ports.keys().copied().collect(),
            edges: g.edges.keys().copied().collect(),
        }
    }

    pub fn from_nodes(nodes: impl IntoIterator<Item = NodeId>) -> Self {
        Subgraph { nodes: nodes.into_iter().collect(), ..Default::default() }
    }

    pub fn from_elems(elems: impl IntoIterator<Item = Elem>) -> Self {
        let mut s = Subgraph::new();
        for e in elems {
            s.insert(e);
        }
        s
    }

    pub fn insert(&mut self, e: Elem) {
        match e {
            Elem::Node(n) => {
                self.nodes.insert(n);
            }
            Elem::Port(p) => {
                self.ports.insert(p);
            }
            Elem::Edge(x) => {
                self.edges.insert(x);
            }
        }
    }

    pub fn contains(&self, e: Elem) -> bool {
        match e {
            Elem::Node(n) => self.nodes.contains(&n),
            Elem::Port(p) => self.ports.contains(&p),
            Elem::Edge(x) => self.edges.contains(&x),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.ports.is_empty() && self.edges.is_empty()
    }

    pub fn len(&self) -> usize {
        self.nodes.len() + self.ports.len() + self.edges.len()
    }

    /// Elements in canonical order: nodes, then ports, then edges, each by id.
    pub fn elems(&self) -> impl Iterator<Item = Elem> + '_ {
        self.nodes
            .iter()
            .map(|n| Elem::Node(*n))
            .chain(self.ports.iter().map(|p| Elem::Port(*p)))
            .chain(self.edges.iter().map(|e| Elem::Edge(*e)))
    }

    pub fn union(&self, other: &Subgraph) -> Subgraph {
        Subgraph {
            nodes: &self.nodes | &other.nodes,
            ports: &self.ports | &other.ports,
            edges: &self.edges | &other.edges,
        }
    }

    pub fn difference(&self, other: &Subgraph) -> Subgraph {
        Subgraph {
            nodes: &self.nodes - &other.nodes,
            ports: &self.ports - &other.ports,
            edges: &self.edges - &other.edges,
        }
    }

    pub fn intersection(&self, other: &Subgraph) -> Subgraph {
        Subgraph {
            nodes: &self.nodes & &other.nodes,
            ports: &self.ports & &other.ports,
            edges: &self.edges & &other.edges,
        }
    }

    pub fn is_subset(&self, other: &Subgraph) -> bool {
        self.nodes.is_subset(&other.nodes)
            && self.ports.is_subset(&other.ports)
            && self.edges.is_subset(&other.edges)
    }

    /// Drop elements that no longer exist in `g`.
    pub fn restrict_to(&self, g: &PortGraph) -> Subgraph {
        Subgraph {
            nodes: self.nodes.iter().filter(|n| g.nodes.contains_key(n)).copied().collect(),
            ports: self.ports.iter().filter(|p| g.ports.contains_key(p)).copied().collect(),
            edges: self.edges.iter().filter(|e| g.edges.contains_key(e)).copied().collect(),
        }
    }
}
