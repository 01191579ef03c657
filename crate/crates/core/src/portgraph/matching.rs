use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::graph::{EdgeId, Elem, NodeId, PortGraph, PortId, Subgraph};
use super::record::Value;
use super::rule::RewriteRule;

/// An injective, structure- and label-preserving map from a rule's
/// left-hand side into a host graph.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Morphism {
    pub node_map: BTreeMap<NodeId, NodeId>,
    pub port_map: BTreeMap<PortId, PortId>,
    pub edge_map: BTreeMap<EdgeId, EdgeId>,
    pub bindings: BTreeMap<String, Value>,
}

impl Morphism {
    /// `f(L)` as a set of host elements.
    pub fn image(&self) -> Subgraph {
        Subgraph {
            nodes: self.node_map.values().copied().collect(),
            ports: self.port_map.values().copied().collect(),
            edges: self.edge_map.values().copied().collect(),
        }
    }

    /// Image of a subgraph of the lhs. Elements outside the domain are dropped.
    pub fn image_of(&self, sub: &Subgraph) -> Subgraph {
        Subgraph {
            nodes: sub.nodes.iter().filter_map(|n| self.node_map.get(n)).copied().collect(),
            ports: sub.ports.iter().filter_map(|p| self.port_map.get(p)).copied().collect(),
            edges: sub.edges.iter().filter_map(|e| self.edge_map.get(e)).copied().collect(),
        }
    }

    pub fn host_nodes_sorted(&self) -> Vec<NodeId> {
        let mut v: Vec<NodeId> = self.node_map.values().copied().collect();
        v.sort();
        v
    }

    /// Ordering key for canonical match order: sorted host node ids first,
    /// then the full maps in lhs order to break ties between automorphic
    /// embeddings.
    pub fn sort_key(&self) -> (Vec<NodeId>, Vec<NodeId>, Vec<PortId>, Vec<EdgeId>) {
        (
            self.host_nodes_sorted(),
            self.node_map.values().copied().collect(),
            self.port_map.values().copied().collect(),
            self.edge_map.values().copied().collect(),
        )
    }

    /// Short stable hash of the element maps.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for (a, b) in &self.node_map {
            h.update(format!("{a}>{b};"));
        }
        for (a, b) in &self.port_map {
            h.update(format!("{a}>{b};"));
        }
        for (a, b) in &self.edge_map {
            h.update(format!("{a}>{b};"));
        }
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn elem_image(&self, e: Elem) -> Option<Elem> {
        match e {
            Elem::Node(n) => self.node_map.get(&n).map(|x| Elem::Node(*x)),
            Elem::Port(p) => self.port_map.get(&p).map(|x| Elem::Port(*x)),
            Elem::Edge(x) => self.edge_map.get(&x).map(|y| Elem::Edge(*y)),
        }
    }
}

/// Every match of `rule` in `host`, in canonical order.
///
/// A match maps each lhs node to a distinct host node with the same number of
/// ports, each lhs port to a distinct port of its node's image, and each lhs
/// edge to a distinct host edge between the images of its ports. Ground record
/// values must be equal to the host's; value variables bind consistently.
/// Lhs ports not attached to the arrow node must have no host edges outside
/// the image, so that deleting the image leaves no dangling edge.
pub fn match_rule(host: &PortGraph, rule: &RewriteRule) -> Vec<Morphism> {
    let lhs = rule.lhs();
    let mut search = Search {
        host,
        rule,
        lhs_nodes: lhs.nodes().map(|(n, _)| n).collect(),
        lhs_edges: lhs.edges().map(|(e, _)| e).collect(),
        out: Vec::new(),
    };
    let mut st = State::default();
    search.nodes(0, &mut st);
    let mut out = search.out;
    out.sort_by_key(Morphism::sort_key);
    out
}

#[derive(Default)]
struct State {
    m: Morphism,
    used_nodes: BTreeSet<NodeId>,
    used_ports: BTreeSet<PortId>,
    used_edges: BTreeSet<EdgeId>,
}

struct Search<'a> {
    host: &'a PortGraph,
    rule: &'a RewriteRule,
    lhs_nodes: Vec<NodeId>,
    lhs_edges: Vec<EdgeId>,
    out: Vec<Morphism>,
}

impl Search<'_> {
    fn nodes(&mut self, i: usize, st: &mut State) {
        if i == self.lhs_nodes.len() {
            self.edges(0, st);
            return;
        }
        let ln = self.lhs_nodes[i];
        let lnode = self.rule.lhs().node(ln).expect("lhs node");
        let host = self.host;
        for (hn, hnode) in host.nodes() {
            if st.used_nodes.contains(&hn) || hnode.ports.len() != lnode.ports.len() {
                continue;
            }
            let saved = st.m.bindings.clone();
            if !lnode.record.matches(&hnode.record, &mut st.m.bindings) {
                continue;
            }
            st.m.node_map.insert(ln, hn);
            st.used_nodes.insert(hn);
            self.ports(i, 0, st);
            st.used_nodes.remove(&hn);
            st.m.node_map.remove(&ln);
            st.m.bindings = saved;
        }
    }

    fn ports(&mut self, i: usize, k: usize, st: &mut State) {
        let ln = self.lhs_nodes[i];
        let lports = &self.rule.lhs().node(ln).expect("lhs node").ports;
        if k == lports.len() {
            if self.edges_still_possible(st) {
                self.nodes(i + 1, st);
            }
            return;
        }
        let lp = lports[k];
        let lrec = &self.rule.lhs().port(lp).expect("lhs port").record;
        let hn = st.m.node_map[&ln];
        let host = self.host;
        for hp in &host.node(hn).expect("host node").ports {
            if st.used_ports.contains(hp) {
                continue;
            }
            let saved = st.m.bindings.clone();
            if !lrec.matches(&host.port(*hp).expect("host port").record, &mut st.m.bindings) {
                continue;
            }
            st.m.port_map.insert(lp, *hp);
            st.used_ports.insert(*hp);
            self.ports(i, k + 1, st);
            st.used_ports.remove(hp);
            st.m.port_map.remove(&lp);
            st.m.bindings = saved;
        }
    }

    /// Host edges that could be images of lhs edge `le` under the current
    /// port map.
    fn edge_candidates(&self, le: EdgeId, st: &State) -> Option<Vec<EdgeId>> {
        let ledge = self.rule.lhs().edge(le).expect("lhs edge");
        let a = *st.m.port_map.get(&ledge.ends[0])?;
        let b = *st.m.port_map.get(&ledge.ends[1])?;
        let cands = self
            .host
            .port_edges(a)
            .filter(|he| {
                let h = self.host.edge(*he).expect("host edge");
                if a == b {
                    h.ends == [a, a]
                } else {
                    (h.ends == [a, b]) || (h.ends == [b, a])
                }
            })
            .collect();
        Some(cands)
    }

    fn edges_still_possible(&self, st: &State) -> bool {
        self.lhs_edges.iter().all(|le| match self.edge_candidates(*le, st) {
            None => true,
            Some(cands) => {
                let lrec = &self.rule.lhs().edge(*le).expect("lhs edge").record;
                cands.iter().any(|he| {
                    let mut b = st.m.bindings.clone();
                    lrec.matches(&self.host.edge(*he).expect("host edge").record, &mut b)
                })
            }
        })
    }

    fn edges(&mut self, j: usize, st: &mut State) {
        if j == self.lhs_edges.len() {
            if self.dangling_free(st) {
                self.out.push(st.m.clone());
            }
            return;
        }
        let le = self.lhs_edges[j];
        let lrec = &self.rule.lhs().edge(le).expect("lhs edge").record;
        let cands = self.edge_candidates(le, st).expect("all ports mapped");
        for he in cands {
            if st.used_edges.contains(&he) {
                continue;
            }
            let saved = st.m.bindings.clone();
            if !lrec.matches(&self.host.edge(he).expect("host edge").record, &mut st.m.bindings) {
                continue;
            }
            st.m.edge_map.insert(le, he);
            st.used_edges.insert(he);
            self.edges(j + 1, st);
            st.used_edges.remove(&he);
            st.m.edge_map.remove(&le);
            st.m.bindings = saved;
        }
    }

    fn dangling_free(&self, st: &State) -> bool {
        st.m.port_map.iter().all(|(lp, hp)| {
            self.rule.is_arrow_connected(*lp)
                || self.host.port_edges(*hp).all(|he| st.used_edges.contains(&he))
        })
    }
}
