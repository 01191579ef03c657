use crate::portgraph::{ArrowPort, LocatedRule, NodeId, PortGraph, PortId, Record, RewriteRule, Subgraph, Term};

use super::entity::NodeType;
use super::AUX;

/// Nodes `p`, `c1`, `c2` of one side of the rule, with their ports in
/// `main, In, Out` order.
struct Side {
    graph: PortGraph,
    nodes: [NodeId; 3],
    ports: Vec<PortId>,
}

fn side(with_aux_edge: bool) -> Side {
    let mut g = PortGraph::new();
    let node = |ty: NodeType, var: &str| Record::new(ty.code()).with("type", ty.code()).with("ent", Term::var(var));
    let ports = |ty: NodeType| ty.port_names().iter().map(|p| Record::new(*p)).collect::<Vec<_>>();
    let (p, pp) = g.add_node_with_ports(node(NodeType::P, "p_ent"), ports(NodeType::P));
    let (c1, c1p) = g.add_node_with_ports(node(NodeType::C, "c1_ent"), ports(NodeType::C));
    let (c2, c2p) = g.add_node_with_ports(node(NodeType::C, "c2_ent"), ports(NodeType::C));
    g.add_edge(pp[0], c1p[0], Record::new("PC").with("type", "PC").with(AUX, Term::var("pc_aux")))
        .expect("ports exist");
    g.add_edge(
        c1p[2],
        c2p[1],
        Record::new("CC")
            .with("type", "CC")
            .with("target", Term::var("cc_target"))
            .with("auth", true)
            .with("obl", Term::var("cc_obl"))
            .with(AUX, Term::var("cc_aux")),
    )
    .expect("ports exist");
    if with_aux_edge {
        g.add_edge(pp[0], c2p[0], Record::new("PC").with("type", "PC").with(AUX, true))
            .expect("ports exist");
    }
    let ports = pp.into_iter().chain(c1p).chain(c2p).collect();
    Side { graph: g, nodes: [p, c1, c2], ports }
}

/// The rule that makes a principal's membership of a parent category
/// explicit: from `p —PC— c1` and `c1 →CC_Pr c2` it adds an auxiliary
/// `p —PC— c2` edge.
///
/// `W` is `{p, c1}`: the principal and the category it already reaches must
/// be the part of the match inside the position. After rewriting `p` and
/// `c1` stay in position and `c2` is banned, so a category is processed once
/// per level of the hierarchy.
///
/// A `CC` edge whose target holds both categories attaches to two `In`
/// ports and is not matched.
pub fn aux_pc_rule() -> LocatedRule {
    let lhs = side(false);
    let rhs = side(true);
    let arrow = lhs
        .ports
        .iter()
        .zip(&rhs.ports)
        .map(|(l, r)| ArrowPort::Bridge { lhs: *l, rhs: vec![*r] })
        .collect();
    let rule = RewriteRule::new("auxPC", lhs.graph, rhs.graph, arrow).expect("auxPC is a valid rule");
    LocatedRule {
        rule,
        where_lhs: Some(Subgraph::from_nodes([lhs.nodes[0], lhs.nodes[1]])),
        pos_rhs: Subgraph::from_nodes([rhs.nodes[0], rhs.nodes[1]]),
        ban_rhs: Subgraph::from_nodes([rhs.nodes[2]]),
    }
}
