//! Random category hierarchies for the auxiliary-membership script, and a
//! matrix closure of their memberships.

use std::collections::BTreeSet;

use cbaco_core::policy::{aux_pc_rule, EntityRef, PolicyGraph};
use cbaco_core::portgraph::LocatedGraph;
use cbaco_core::strategy::{eval_strategy, EvalOptions, Evaluation, RuleSet, Strategy};
use cbaco_core::workspace::PolicyFile;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::policy::{clean, closure, hasse, names};

pub const SCRIPT: &str = include_str!("../../../../fixtures/aux_pc.strat");
pub const MAX_NODES: usize = 30;

pub type Pair = (String, String);

pub fn rules() -> RuleSet {
    [("auxPC".to_string(), aux_pc_rule())].into()
}

/// A policy whose categories form a random order, with memberships on an
/// antichain per principal and a few grants. At most [`MAX_NODES`] nodes.
pub fn hierarchy(seed: u64) -> PolicyFile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nc = rng.gen_range(2..=10);
    let np = rng.gen_range(1..=5);
    let mut f = PolicyFile {
        principals: names("p", np),
        categories: names("c", nc),
        actions: names("a", 2),
        resources: names("r", 2),
        ..Default::default()
    };
    let cat = |i: usize| format!("c{i}");
    let density = rng.gen_range(0.2..0.6);
    let auth = hasse(&mut rng, nc, density);
    f.cc_auth = auth.iter().map(|(i, j)| (cat(*i), cat(*j))).collect();
    // some authorization edges also carry the obligation order, some
    // obligation-only edges must not be followed
    f.cc_obl = auth.iter().filter(|_| rng.gen_bool(0.3)).map(|(i, j)| (cat(*i), cat(*j))).collect();
    for (i, j) in hasse(&mut rng, nc, 0.15) {
        if !auth.contains(&(i, j)) && !f.cc_obl.contains(&(cat(i), cat(j))) {
            f.cc_obl.push((cat(i), cat(j)));
            if !clean(&f) {
                f.cc_obl.pop();
            }
        }
    }
    let mut pcs: Vec<Pair> = Vec::new();
    for p in &f.principals {
        for c in &f.categories {
            if rng.gen_bool(0.35) {
                pcs.push((p.clone(), c.clone()));
            }
        }
    }
    pcs.shuffle(&mut rng);
    for pc in pcs {
        f.pca.push(pc);
        if !clean(&f) {
            f.pca.pop();
        }
    }
    for _ in 0..rng.gen_range(0..=3) {
        let t = (f.actions.choose(&mut rng).unwrap().clone(), f.resources.choose(&mut rng).unwrap().clone(), cat(rng.gen_range(0..nc)));
        if !f.arca.contains(&t) {
            f.arca.push(t);
            if !clean(&f) {
                f.arca.pop();
            }
        }
    }
    f
}

/// `PCA ∘ ⊆*` over the authorization order, from the file lists alone.
pub fn expected_memberships(f: &PolicyFile) -> BTreeSet<Pair> {
    let idx = |c: &str| f.categories.iter().position(|x| x == c).unwrap();
    let pairs: Vec<(usize, usize)> = f.cc_auth.iter().map(|(a, b)| (idx(a), idx(b))).collect();
    let star = closure(f.categories.len(), &pairs);
    let mut out = BTreeSet::new();
    for (p, c) in &f.pca {
        for (j, reach) in star[idx(c)].iter().enumerate() {
            if *reach {
                out.insert((p.clone(), f.categories[j].clone()));
            }
        }
    }
    out
}

pub fn run(g: &PolicyGraph, ast: &Strategy) -> Evaluation {
    eval_strategy(LocatedGraph::new(g.port_graph().clone()), ast, &rules(), &EvalOptions::default())
        .expect("the script runs within its budget")
}

/// `(principal, category)` of every auxiliary edge, in graph order.
pub fn aux_memberships(graph: &LocatedGraph) -> Vec<Pair> {
    let g = PolicyGraph::from(graph.graph.clone());
    let mut out = Vec::new();
    for e in g.aux_edges() {
        let [a, b] = g.edge_nodes(e).unwrap();
        let (Some(x), Some(y)) = (g.ent(a), g.ent(b)) else { panic!("aux edge on an untyped node") };
        match (x, y) {
            (EntityRef::Principal(p), EntityRef::Category(c)) | (EntityRef::Category(c), EntityRef::Principal(p)) => {
                out.push((p, c))
            }
            other => panic!("aux edge between {other:?}"),
        }
    }
    out
}

pub fn node_count(f: &PolicyFile) -> usize {
    let perms: BTreeSet<(&String, &String)> = f.arca.iter().map(|(a, r, _)| (a, r)).collect();
    f.principals.len() + f.categories.len() + f.actions.len() + f.resources.len() + perms.len()
}
