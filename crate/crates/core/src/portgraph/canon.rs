use std::collections::{BTreeMap, BTreeSet};

use super::graph::{NodeId, PortGraph, PortId};

/// A string that is equal for two graphs iff they are isomorphic (ids
/// ignored, records compared exactly).
///
/// Colour refinement followed by individualization over the remaining ties.
/// Exponential on highly symmetric graphs; meant for test-sized inputs.
pub fn canonical_form(g: &PortGraph) -> String {
    let initial: BTreeMap<NodeId, String> = g
        .nodes()
        .map(|(n, node)| {
            let mut ports: Vec<String> =
                node.ports.iter().map(|p| g.port(*p).expect("port").record.to_string()).collect();
            ports.sort();
            (n, format!("{}|{}", node.record, ports.join(",")))
        })
        .collect();
    let mut best: Option<String> = None;
    search(g, rank(&initial), &mut best);
    let nodes_part = best.unwrap_or_default();
    // isolated ports cannot exist, but edges-only graphs cannot either;
    // record the element counts so empty-ish graphs compare correctly
    format!("{}/{}/{}#{}", g.node_count(), g.port_count(), g.edge_count(), nodes_part)
}

fn rank(colors: &BTreeMap<NodeId, String>) -> BTreeMap<NodeId, usize> {
    let distinct: BTreeSet<&String> = colors.values().collect();
    let idx: BTreeMap<&String, usize> = distinct.into_iter().enumerate().map(|(i, c)| (c, i)).collect();
    colors.iter().map(|(n, c)| (*n, idx[c])).collect()
}

fn refine(g: &PortGraph, mut colors: BTreeMap<NodeId, usize>) -> BTreeMap<NodeId, usize> {
    loop {
        let classes = colors.values().collect::<BTreeSet<_>>().len();
        let next: BTreeMap<NodeId, String> = g
            .nodes()
            .map(|(n, node)| {
                let mut around: Vec<String> = Vec::new();
                for p in &node.ports {
                    let prec = &g.port(*p).expect("port").record;
                    for e in g.port_edges(*p) {
                        let edge = g.edge(e).expect("edge");
                        let q = edge.opposite(*p);
                        let qport = g.port(q).expect("port");
                        around.push(format!(
                            "{prec}~{}~{}@{}",
                            edge.record, qport.record, colors[&qport.node]
                        ));
                    }
                }
                around.sort();
                (n, format!("{}[{}]", colors[&n], around.join(";")))
            })
            .collect();
        let ranked = rank(&next);
        let new_classes = ranked.values().collect::<BTreeSet<_>>().len();
        colors = ranked;
        if new_classes == classes {
            return colors;
        }
    }
}

fn search(g: &PortGraph, colors: BTreeMap<NodeId, usize>, best: &mut Option<String>) {
    let colors = refine(g, colors);
    let mut classes: BTreeMap<usize, Vec<NodeId>> = BTreeMap::new();
    for (n, c) in &colors {
        classes.entry(*c).or_default().push(*n);
    }
    let Some((_, tied)) = classes.iter().find(|(_, v)| v.len() > 1) else {
        let mut order: Vec<NodeId> = colors.keys().copied().collect();
        order.sort_by_key(|n| colors[n]);
        let enc = encode(g, &order);
        if best.as_ref().is_none_or(|b| enc < *b) {
            *best = Some(enc);
        }
        return;
    };
    for pick in tied {
        // split `pick` off in front of its class
        let split: BTreeMap<NodeId, usize> = colors
            .iter()
            .map(|(n, c)| {
                let c2 = 2 * c + 1;
                (*n, if n == pick { c2 - 1 } else { c2 })
            })
            .collect();
        search(g, split, best);
    }
}

fn encode(g: &PortGraph, order: &[NodeId]) -> String {
    let idx: BTreeMap<NodeId, usize> = order.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let port_key = |p: PortId| -> String {
        let port = g.port(p).expect("port");
        let mut around: Vec<String> = g
            .port_edges(p)
            .map(|e| {
                let edge = g.edge(e).expect("edge");
                let q = g.port(edge.opposite(p)).expect("port");
                format!("{}>{}:{}", edge.record, idx[&q.node], q.record)
            })
            .collect();
        around.sort();
        format!("{}[{}]", port.record, around.join(","))
    };
    let mut out = String::new();
    for n in order {
        let node = g.node(*n).expect("node");
        let mut ports: Vec<String> = node.ports.iter().map(|p| port_key(*p)).collect();
        ports.sort();
        out.push_str(&format!("{}:{}({});", idx[n], node.record, ports.join(",")));
    }
    let mut edges: Vec<String> = g
        .edges()
        .map(|(_, e)| {
            let end = |p: PortId| {
                let port = g.port(p).expect("port");
                format!("{}.{}", idx[&port.node], port.record)
            };
            let mut ends = [end(e.ends[0]), end(e.ends[1])];
            ends.sort();
            format!("{}-{}:{}", ends[0], ends[1], e.record)
        })
        .collect();
    edges.sort();
    out.push_str(&edges.join(";"));
    out
}
