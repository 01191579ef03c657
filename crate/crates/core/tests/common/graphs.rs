//! Random small port graphs and rules, with a brute-force matcher.

use std::collections::{BTreeMap, BTreeSet};

use cbaco_core::portgraph::{
    match_rule, ArrowPort, EdgeId, Morphism, NodeId, PortGraph, PortId, Record, RewriteRule, Term, Value,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NAMES: [&str; 2] = ["X", "Y"];
const PORTS: [&str; 2] = ["p", "q"];
const EDGES: [&str; 2] = ["E", "F"];

pub fn random_host(rng: &mut ChaCha8Rng) -> PortGraph {
    let mut g = PortGraph::new();
    let mut ports = Vec::new();
    for _ in 0..rng.gen_range(2..=6) {
        let n = if rng.gen_bool(0.7) { 1 } else { 2 };
        let rec = Record::new(*NAMES.choose(rng).unwrap()).with("k", rng.gen_range(0..2i64)).with("m", 0i64);
        let prs: Vec<Record> = (0..n).map(|_| Record::new(*PORTS.choose(rng).unwrap())).collect();
        ports.extend(g.add_node_with_ports(rec, prs).1);
    }
    for _ in 0..rng.gen_range(0..=7) {
        let a = *ports.choose(rng).unwrap();
        let b = *ports.choose(rng).unwrap();
        let rec = Record::new(*EDGES.choose(rng).unwrap()).with("w", rng.gen_range(0..2i64));
        g.add_edge(a, b, rec).unwrap();
    }
    g
}

/// A pattern record with a ground name and the extra attribute either ground
/// or a variable shared across the rule. Host records carry one more
/// attribute than patterns, so matching is on a subset.
fn pattern(rng: &mut ChaCha8Rng, names: &[&str], extra: &str) -> Record {
    let r = Record::new(*names.choose(rng).unwrap());
    if rng.gen_bool(0.5) {
        r.with(extra, rng.gen_range(0..2i64))
    } else {
        r.with(extra, Term::var(if rng.gen_bool(0.7) { "v" } else { "u" }))
    }
}

/// A pattern generalizing a host record: the extra attribute is kept or
/// replaced by a variable.
fn generalize(rng: &mut ChaCha8Rng, host: &Record, extra: &str) -> Record {
    let r = Record::new(host.name().expect("named"));
    if rng.gen_bool(0.5) {
        r.with(extra, host.value(extra).expect("extra attribute").clone())
    } else {
        r.with(extra, Term::var(if rng.gen_bool(0.7) { "v" } else { "u" }))
    }
}

/// A random rule. Most left-hand sides are cut out of `host` so that
/// embeddings exist; the rest are drawn independently.
pub fn random_rule(rng: &mut ChaCha8Rng, host: &PortGraph) -> RewriteRule {
    let mut lhs = PortGraph::new();
    let mut lports = Vec::new();
    if rng.gen_bool(0.75) {
        let mut hn: Vec<_> = host.nodes().map(|(n, _)| n).collect();
        hn.shuffle(rng);
        hn.truncate(rng.gen_range(1..=3));
        let mut pmap = BTreeMap::new();
        for n in &hn {
            let node = host.node(*n).unwrap();
            let rec = generalize(rng, &node.record, "k");
            let prs: Vec<Record> = node.ports.iter().map(|p| Record::new(host.port(*p).unwrap().record.name().unwrap())).collect();
            let (_, lp) = lhs.add_node_with_ports(rec, prs);
            pmap.extend(node.ports.iter().copied().zip(lp.iter().copied()));
            lports.extend(lp);
        }
        for (_, e) in host.edges() {
            let (Some(a), Some(b)) = (pmap.get(&e.ends[0]), pmap.get(&e.ends[1])) else { continue };
            if rng.gen_bool(0.7) {
                let rec = generalize(rng, &e.record, "w");
                lhs.add_edge(*a, *b, rec).unwrap();
            }
        }
    } else {
        let lhs_nodes = if rng.gen_bool(0.15) { 3 } else { rng.gen_range(1..=2) };
        for _ in 0..lhs_nodes {
            let n = if rng.gen_bool(0.7) { 1 } else { 2 };
            let rec = pattern(rng, &NAMES, "k");
            let prs: Vec<Record> = (0..n).map(|_| Record::new(*PORTS.choose(rng).unwrap())).collect();
            lports.extend(lhs.add_node_with_ports(rec, prs).1);
        }
        for _ in 0..rng.gen_range(0..=2) {
            let a = *lports.choose(rng).unwrap();
            let b = *lports.choose(rng).unwrap();
            lhs.add_edge(a, b, pattern(rng, &EDGES, "w")).unwrap();
        }
    }
    let mut rhs = PortGraph::new();
    let mut rports = Vec::new();
    for _ in 0..rng.gen_range(0..=2) {
        let rec = Record::new(*NAMES.choose(rng).unwrap()).with("k", 1i64).with("m", 0i64);
        rports.extend(rhs.add_node_with_ports(rec, [Record::new("p")]).1);
    }
    if rports.len() == 2 && rng.gen_bool(0.5) {
        rhs.add_edge(rports[0], rports[1], Record::new("E").with("w", 0i64)).unwrap();
    }
    let mut arrow = Vec::new();
    let mut blackhole = Vec::new();
    for lp in &lports {
        // most lhs ports are attached to the arrow node, otherwise the
        // dangling condition rejects nearly every embedding
        match rng.gen_range(0..5) {
            0 | 1 if !rports.is_empty() => arrow.push(ArrowPort::Bridge { lhs: *lp, rhs: vec![*rports.choose(rng).unwrap()] }),
            0..=2 => blackhole.push(*lp),
            _ => {}
        }
    }
    if !blackhole.is_empty() {
        arrow.push(ArrowPort::Blackhole { lhs: blackhole });
    }
    if lports.len() >= 2 && rng.gen_bool(0.2) {
        arrow.push(ArrowPort::Wire { lhs: [lports[0], lports[1]] });
    }
    RewriteRule::new("r", lhs, rhs, arrow).expect("generated rule is valid")
}

pub fn bind_all(pairs: &[(&Record, &Record)]) -> Option<BTreeMap<String, Value>> {
    let mut b: BTreeMap<String, Value> = BTreeMap::new();
    for (pat, host) in pairs {
        for (attr, term) in pat.iter() {
            let hv = host.value(attr)?;
            match term {
                Term::Val(v) if v != hv => return None,
                Term::Val(_) => {}
                Term::Var { var } => {
                    if b.entry(var.clone()).or_insert_with(|| hv.clone()) != hv {
                        return None;
                    }
                }
            }
        }
    }
    Some(b)
}

pub fn injections<T: Copy + Ord>(k: usize, from: &[T]) -> Vec<Vec<T>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for (i, x) in from.iter().enumerate() {
        let rest: Vec<T> = from.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, y)| *y).collect();
        for mut tail in injections(k - 1, &rest) {
            tail.insert(0, *x);
            out.push(tail);
        }
    }
    out
}

pub type Key = (BTreeMap<NodeId, NodeId>, BTreeMap<PortId, PortId>, BTreeMap<EdgeId, EdgeId>, BTreeMap<String, Value>);

pub fn key(m: &Morphism) -> Key {
    (m.node_map.clone(), m.port_map.clone(), m.edge_map.clone(), m.bindings.clone())
}

/// Every injective, label-preserving embedding satisfying the dangling
/// condition, enumerated without pruning.
pub fn brute_force(host: &PortGraph, rule: &RewriteRule) -> BTreeSet<Key> {
    let lhs = rule.lhs();
    let lnodes: Vec<NodeId> = lhs.nodes().map(|(n, _)| n).collect();
    let hnodes: Vec<NodeId> = host.nodes().map(|(n, _)| n).collect();
    let lports: Vec<PortId> = lhs.ports().map(|(p, _)| p).collect();
    let ledges: Vec<EdgeId> = lhs.edges().map(|(e, _)| e).collect();
    let hedges: Vec<EdgeId> = host.edges().map(|(e, _)| e).collect();
    let mut out = BTreeSet::new();
    for nimg in injections(lnodes.len(), &hnodes) {
        let nmap: BTreeMap<NodeId, NodeId> = lnodes.iter().copied().zip(nimg).collect();
        if nmap.iter().any(|(l, h)| lhs.node(*l).unwrap().ports.len() != host.node(*h).unwrap().ports.len()) {
            continue;
        }
        // ports: any bijection per node, built as the product over nodes
        let mut pmaps: Vec<BTreeMap<PortId, PortId>> = vec![BTreeMap::new()];
        for (l, h) in &nmap {
            let lp = &lhs.node(*l).unwrap().ports;
            let hp = &host.node(*h).unwrap().ports;
            let mut next = Vec::new();
            for pm in &pmaps {
                for img in injections(lp.len(), hp) {
                    let mut m = pm.clone();
                    m.extend(lp.iter().copied().zip(img));
                    next.push(m);
                }
            }
            pmaps = next;
        }
        for pmap in pmaps {
            for eimg in injections(ledges.len(), &hedges) {
                let emap: BTreeMap<EdgeId, EdgeId> = ledges.iter().copied().zip(eimg).collect();
                let ends_ok = emap.iter().all(|(l, h)| {
                    let [a, b] = lhs.edge(*l).unwrap().ends;
                    let (a, b) = (pmap[&a], pmap[&b]);
                    let he = host.edge(*h).unwrap().ends;
                    he == [a, b] || he == [b, a]
                });
                if !ends_ok {
                    continue;
                }
                let mut pairs: Vec<(&Record, &Record)> = Vec::new();
                pairs.extend(nmap.iter().map(|(l, h)| (&lhs.node(*l).unwrap().record, &host.node(*h).unwrap().record)));
                pairs.extend(pmap.iter().map(|(l, h)| (&lhs.port(*l).unwrap().record, &host.port(*h).unwrap().record)));
                pairs.extend(emap.iter().map(|(l, h)| (&lhs.edge(*l).unwrap().record, &host.edge(*h).unwrap().record)));
                let Some(bindings) = bind_all(&pairs) else { continue };
                let used: BTreeSet<EdgeId> = emap.values().copied().collect();
                let dangling = lports.iter().any(|lp| {
                    !rule.is_arrow_connected(*lp) && host.port_edges(pmap[lp]).any(|e| !used.contains(&e))
                });
                if !dangling {
                    out.insert((nmap.clone(), pmap.clone(), emap, bindings));
                }
            }
        }
    }
    out
}

/// A host and a rule drawn from one seed.
pub fn pair(seed: u64) -> (PortGraph, RewriteRule) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let host = random_host(&mut rng);
    let rule = random_rule(&mut rng, &host);
    (host, rule)
}

/// Whether `match_rule` returns exactly the brute-force embeddings, once
/// each and in canonical order.
pub fn agrees_with_brute_force(host: &PortGraph, rule: &RewriteRule) -> bool {
    let found = match_rule(host, rule);
    let keys: BTreeSet<Key> = found.iter().map(key).collect();
    let sorted = found.windows(2).all(|w| w[0].sort_key() <= w[1].sort_key());
    keys.len() == found.len() && sorted && keys == brute_force(host, rule)
}
