use std::collections::{BTreeMap, BTreeSet};

use super::graph::{EdgeId, Elem, PortGraph, PortId};
use super::matching::Morphism;
use super::record::Record;
use super::rule::{ArrowPort, RewriteRule};
use super::PortGraphError;

/// Result of a rewriting step together with where the rhs landed.
#[derive(Debug, Clone)]
pub struct Rewritten {
    pub graph: PortGraph,
    /// rhs element → its copy in `graph`.
    pub rhs_image: BTreeMap<Elem, Elem>,
    /// `(external edge, edge created from it)` for every reconnected edge.
    pub rewired: Vec<(EdgeId, EdgeId)>,
}

/// One rewriting step `G →f G'`.
pub fn apply_rule(host: &PortGraph, rule: &RewriteRule, f: &Morphism) -> Result<PortGraph, PortGraphError> {
    apply_rule_traced(host, rule, f).map(|r| r.graph)
}

/// [`apply_rule`], also returning the image of every rhs element.
pub fn apply_rule_traced(
    host: &PortGraph,
    rule: &RewriteRule,
    f: &Morphism,
) -> Result<Rewritten, PortGraphError> {
    check_morphism(host, rule, f)?;

    let image = f.image();
    let inverse_port: BTreeMap<PortId, PortId> = f.port_map.iter().map(|(l, h)| (*h, *l)).collect();

    // build
    let mut g = host.clone();
    let mut inst = PortGraph::new();
    let mut to_inst = BTreeMap::new();
    {
        let rhs = rule.rhs();
        let mut port_tr = BTreeMap::new();
        for (n, node) in rhs.nodes() {
            let nn = inst.add_node(node.record.instantiate(&f.bindings));
            to_inst.insert(Elem::Node(n), Elem::Node(nn));
            for p in &node.ports {
                let rec = rhs.port(*p).expect("rhs port").record.instantiate(&f.bindings);
                let np = inst.add_port(nn, rec).expect("node exists");
                port_tr.insert(*p, np);
                to_inst.insert(Elem::Port(*p), Elem::Port(np));
            }
        }
        for (e, edge) in rhs.edges() {
            let ne = inst
                .add_edge(port_tr[&edge.ends[0]], port_tr[&edge.ends[1]], edge.record.instantiate(&f.bindings))
                .expect("ports exist");
            to_inst.insert(Elem::Edge(e), Elem::Edge(ne));
        }
    }
    let absorbed = g.absorb(&inst);
    let rhs_image: BTreeMap<Elem, Elem> = to_inst.into_iter().map(|(r, i)| (r, absorbed[&i])).collect();
    let rhs_port = |p: PortId| match rhs_image[&Elem::Port(p)] {
        Elem::Port(x) => x,
        _ => unreachable!("ports map to ports"),
    };

    // rewire
    // where an endpoint on a matched port goes after deletion
    let replacements = |hp: PortId| -> Vec<PortId> {
        match inverse_port.get(&hp) {
            Some(lp) => rule.bridge_targets(*lp).map(rhs_port).collect(),
            None => vec![hp],
        }
    };
    let external: BTreeSet<EdgeId> = image
        .ports
        .iter()
        .flat_map(|hp| host.port_edges(*hp))
        .filter(|e| !image.edges.contains(e))
        .collect();
    let mut new_edges: Vec<(EdgeId, PortId, PortId, Record)> = Vec::new();
    for e in &external {
        let edge = host.edge(*e).expect("host edge");
        for a in replacements(edge.ends[0]) {
            for b in replacements(edge.ends[1]) {
                new_edges.push((*e, a, b, edge.record.clone()));
            }
        }
    }
    for arrow in rule.arrow() {
        let ArrowPort::Wire { lhs: [p1, p2] } = arrow else { continue };
        let side = |lp: &PortId| -> Vec<(EdgeId, PortId, &Record)> {
            let hp = f.port_map[lp];
            host.port_edges(hp)
                .filter(|e| external.contains(e))
                .map(|e| {
                    let edge = host.edge(e).expect("host edge");
                    (e, edge.opposite(hp), &edge.record)
                })
                .collect()
        };
        for (e1, q1, rec) in side(p1) {
            for (_, q2, _) in side(p2) {
                for a in replacements(q1) {
                    for b in replacements(q2) {
                        new_edges.push((e1, a, b, rec.clone()));
                    }
                }
            }
        }
    }

    // delete
    for e in &image.edges {
        g.remove_edge(*e);
    }
    for n in &image.nodes {
        g.remove_node(*n);
    }
    let mut rewired = Vec::with_capacity(new_edges.len());
    for (old, a, b, rec) in new_edges {
        let new = g.add_edge(a, b, rec).expect("rewired endpoints survive deletion");
        rewired.push((old, new));
    }

    Ok(Rewritten { graph: g, rhs_image, rewired })
}

fn check_morphism(host: &PortGraph, rule: &RewriteRule, f: &Morphism) -> Result<(), PortGraphError> {
    let bad = |why: String| Err(PortGraphError::InvalidMorphism(why));
    let lhs = rule.lhs();
    if f.node_map.len() != lhs.node_count()
        || f.port_map.len() != lhs.port_count()
        || f.edge_map.len() != lhs.edge_count()
    {
        return bad("domain differs from the rule's lhs".into());
    }
    let mut b = f.bindings.clone();
    for (ln, hn) in &f.node_map {
        let (Some(l), Some(h)) = (lhs.node(*ln), host.node(*hn)) else {
            return bad(format!("{ln} or its image {hn} is missing"));
        };
        if l.ports.len() != h.ports.len() || !l.record.matches(&h.record, &mut b) {
            return bad(format!("{ln} does not match {hn}"));
        }
    }
    for (lp, hp) in &f.port_map {
        let (Some(l), Some(h)) = (lhs.port(*lp), host.port(*hp)) else {
            return bad(format!("{lp} or its image {hp} is missing"));
        };
        if f.node_map.get(&l.node) != Some(&h.node) || !l.record.matches(&h.record, &mut b) {
            return bad(format!("{lp} does not match {hp}"));
        }
    }
    for (le, he) in &f.edge_map {
        let (Some(l), Some(h)) = (lhs.edge(*le), host.edge(*he)) else {
            return bad(format!("{le} or its image {he} is missing"));
        };
        let mut want = [f.port_map[&l.ends[0]], f.port_map[&l.ends[1]]];
        let mut got = h.ends;
        want.sort();
        got.sort();
        if want != got || !l.record.matches(&h.record, &mut b) {
            return bad(format!("{le} does not match {he}"));
        }
    }
    if b != f.bindings {
        return bad("bindings are incomplete".into());
    }
    let injective = |n: usize, s: usize| n == s;
    if !injective(f.node_map.len(), f.node_map.values().collect::<BTreeSet<_>>().len())
        || !injective(f.port_map.len(), f.port_map.values().collect::<BTreeSet<_>>().len())
        || !injective(f.edge_map.len(), f.edge_map.values().collect::<BTreeSet<_>>().len())
    {
        return bad("not injective".into());
    }
    let image_edges: BTreeSet<EdgeId> = f.edge_map.values().copied().collect();
    for (lp, hp) in &f.port_map {
        if !rule.is_arrow_connected(*lp) && host.port_edges(*hp).any(|e| !image_edges.contains(&e)) {
            return bad(format!("deleting {hp} would leave a dangling edge"));
        }
    }
    Ok(())
}
