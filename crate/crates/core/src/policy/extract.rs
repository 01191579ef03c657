use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::entity::{Auth, DutySpec, EdgeKind, EntityRef, NodeType};
use super::path::{reach, shortest_constrained_path, Path};
use super::typed::TypedView;
use super::validate::{patterns, validate};
use super::{PolicyError, PolicyGraph};
use crate::portgraph::NodeId;

type Pair = (String, String);
type Triple = (String, String, String);
/// `(a, r, ge₁, ge₂, x)` with `None` for ⊥.
type OblTuple = (String, String, Option<String>, Option<String>, String);
/// `(p, a, r, ge₁, ge₂)` with `None` for ⊥.
type OpaTuple = (String, String, String, Option<String>, Option<String>);

/// The relational policy a graph denotes. Every set is sorted, so two
/// extractions compare (and serialize) equal exactly when they agree.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyRelations {
    pub principals: BTreeSet<String>,
    pub categories: BTreeSet<String>,
    pub actions: BTreeSet<String>,
    pub resources: BTreeSet<String>,
    pub events: BTreeSet<String>,
    pub schemes: BTreeSet<String>,
    /// Maximal `→EE` chains, events by id.
    pub histories: BTreeSet<Vec<String>>,
    /// `⊆`, reflexive.
    pub sub_auth: BTreeSet<Pair>,
    /// `⊆_O`, reflexive.
    pub sub_obl: BTreeSet<Pair>,
    /// `(p, c)`.
    pub pca: BTreeSet<Pair>,
    /// `(a, r, c)`.
    pub arca: BTreeSet<Triple>,
    /// `(p, a, r)`.
    pub par: BTreeSet<Triple>,
    pub barca: BTreeSet<Triple>,
    pub bar: BTreeSet<Triple>,
    pub undet: BTreeSet<Triple>,
    /// `(a, r, ge₁, ge₂, c)`.
    pub oca: BTreeSet<OblTuple>,
    /// `(p, a, r, ge₁, ge₂)`.
    pub opa: BTreeSet<OpaTuple>,
    pub da: BTreeSet<DutySpec>,
    /// `(e, ge)`.
    pub et: BTreeSet<Pair>,
    /// `(eⱼ, eₖ, h)` with `j < k` in history `h`.
    pub ei: BTreeSet<(String, String, Vec<String>)>,
}

/// Extract the relations of a well-formed graph.
pub fn extract_policy(g: &PolicyGraph) -> Result<PolicyRelations, PolicyError> {
    let violations = validate(g);
    if !violations.is_empty() {
        return Err(PolicyError::NotWellFormed(violations));
    }
    Ok(extract_unchecked(&g.view()))
}

/// Extraction without the well-formedness check. On an ill-formed graph the
/// result follows the same path definitions but may break the axioms (for
/// instance `PAR ∩ BAR` may be non-empty).
pub fn extract_unchecked(v: &TypedView) -> PolicyRelations {
    let pats = patterns();
    let ent = |n: NodeId| v.nodes[&n].ent.clone();
    let name = |n: NodeId| v.nodes[&n].ent.name();
    let perm = |n: NodeId| match ent(n) {
        EntityRef::Permission { action, resource } => (action, resource),
        _ => unreachable!("Pr node"),
    };
    let obl = |n: NodeId| match ent(n) {
        EntityRef::Obligation(o) => o,
        _ => unreachable!("O node"),
    };

    let mut rel = PolicyRelations {
        principals: v.names(NodeType::P),
        categories: v.names(NodeType::C),
        actions: v.names(NodeType::A),
        resources: v.names(NodeType::R),
        events: v.names(NodeType::E),
        schemes: v.names(NodeType::G),
        ..Default::default()
    };

    for c in v.of_type(NodeType::C) {
        for d in reach(v, c, &pats.sub_auth, false) {
            rel.sub_auth.insert((name(c), name(d)));
        }
        for d in reach(v, c, &pats.sub_obl, false) {
            rel.sub_obl.insert((name(c), name(d)));
        }
    }

    for e in &v.edges {
        let [x, y] = e.ends;
        let (c, other) = if v.ty(x) == Some(NodeType::C) { (x, y) } else { (y, x) };
        match e.kind {
            EdgeKind::PC => {
                let (p, c) = if v.ty(x) == Some(NodeType::P) { (x, y) } else { (y, x) };
                rel.pca.insert((name(p), name(c)));
            }
            EdgeKind::CPr(auth) => {
                let (a, r) = perm(other);
                let t = (a, r, name(c));
                if auth == Auth::A {
                    rel.arca.insert(t);
                } else {
                    rel.barca.insert(t);
                }
            }
            EdgeKind::CO => {
                let o = obl(other);
                rel.oca.insert((o.action, o.resource, o.start, o.end, name(c)));
            }
            _ => {}
        }
    }

    for p in v.of_type(NodeType::P) {
        for pr in reach(v, p, &pats.par, false) {
            let (a, r) = perm(pr);
            rel.par.insert((name(p), a, r));
        }
        for pr in reach(v, p, &pats.bar, true) {
            let (a, r) = perm(pr);
            rel.bar.insert((name(p), a, r));
        }
        for o in reach(v, p, &pats.opa, false) {
            let o = obl(o);
            rel.opa.insert((name(p), o.action, o.resource, o.start, o.end));
        }
    }
    for p in &rel.principals {
        for a in &rel.actions {
            for r in &rel.resources {
                let t = (p.clone(), a.clone(), r.clone());
                if !rel.par.contains(&t) && !rel.bar.contains(&t) {
                    rel.undet.insert(t);
                }
            }
        }
    }

    for d in v.of_type(NodeType::D) {
        if let EntityRef::Duty(spec) = ent(d) {
            rel.da.insert(spec);
        }
    }
    for e in v.of_type(NodeType::E) {
        for ge in reach(v, e, &pats.et, false) {
            rel.et.insert((name(e), name(ge)));
        }
    }
    for h in history_chains(v) {
        let ids: Vec<String> = h.iter().map(|n| name(*n)).collect();
        for j in 0..ids.len() {
            for k in j + 1..ids.len() {
                rel.ei.insert((ids[j].clone(), ids[k].clone(), ids.clone()));
            }
        }
        rel.histories.insert(ids);
    }
    rel
}

/// The `→EE` successors of an event node.
pub(crate) fn next_events(v: &TypedView, n: NodeId) -> Vec<NodeId> {
    v.incident(n)
        .filter(|e| e.kind == EdgeKind::EE)
        .filter_map(|e| {
            let m = e.other(n);
            (m != n && e.target.contains(&m)).then_some(m)
        })
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Maximal simple `→EE` paths, each started at an event nothing precedes.
/// An event on no `EE` edge is a history of its own.
pub(crate) fn history_chains(v: &TypedView) -> Vec<Vec<NodeId>> {
    let events: Vec<NodeId> = v.of_type(NodeType::E).collect();
    let has_pred: BTreeSet<NodeId> = events.iter().flat_map(|n| next_events(v, *n)).collect();
    let mut out = Vec::new();
    for s in events.iter().filter(|n| !has_pred.contains(n)) {
        let mut path = vec![*s];
        extend_chain(v, &mut path, &mut out);
    }
    out
}

fn extend_chain(v: &TypedView, path: &mut Vec<NodeId>, out: &mut Vec<Vec<NodeId>>) {
    let last = *path.last().expect("non-empty");
    let next: Vec<NodeId> = next_events(v, last).into_iter().filter(|m| !path.contains(m)).collect();
    if next.is_empty() {
        out.push(path.clone());
        return;
    }
    for m in next {
        path.push(m);
        extend_chain(v, path, out);
        path.pop();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Grant,
    Deny,
    Undetermined,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Grant => "grant",
            Verdict::Deny => "deny",
            Verdict::Undetermined => "undetermined",
        })
    }
}

/// The answer to an access request, with a shortest witnessing path for
/// grant and deny.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorizationDecision {
    pub principal: String,
    pub action: String,
    pub resource: String,
    pub verdict: Verdict,
    /// Entities along the witness, from the principal to the permission.
    pub path: Vec<String>,
    pub path_nodes: Vec<NodeId>,
    pub note: String,
}

/// Decide `(p, a, r)`. The three entities must exist in the graph.
pub fn decide(g: &PolicyGraph, p: &str, a: &str, r: &str) -> Result<AuthorizationDecision, PolicyError> {
    let v = g.view();
    let need = |e: EntityRef| {
        v.find(&e).ok_or_else(|| PolicyError::UnknownEntity { kind: e.node_type(), name: e.name() })
    };
    let pn = need(EntityRef::Principal(p.into()))?;
    need(EntityRef::Action(a.into()))?;
    need(EntityRef::Resource(r.into()))?;
    let pr = v.find(&EntityRef::Permission { action: a.into(), resource: r.into() });
    let pats = patterns();
    let witness = |inverse: bool| -> Option<Path> {
        let pr = pr?;
        let pat = if inverse { &pats.bar } else { &pats.par };
        shortest_constrained_path(&v, pn, pat, inverse, |n| n == pr)
    };
    let (grant, ban) = (witness(false), witness(true));
    let mk = |verdict, path: Option<Path>, note: String| {
        let nodes = path.map(|p| p.nodes).unwrap_or_default();
        AuthorizationDecision {
            principal: p.into(),
            action: a.into(),
            resource: r.into(),
            verdict,
            path: nodes.iter().map(|n| v.nodes[n].ent.name()).collect(),
            path_nodes: nodes,
            note,
        }
    };
    match (grant, ban) {
        (Some(_), Some(_)) => Err(PolicyError::NotWellFormed(vec![super::Violation::GrantBanConflict {
            principal: p.into(),
            action: a.into(),
            resource: r.into(),
        }])),
        (Some(w), None) => Ok(mk(Verdict::Grant, Some(w), "authorized through a category".into())),
        (None, Some(w)) => Ok(mk(Verdict::Deny, Some(w), "banned through a category".into())),
        (None, None) => Ok(mk(
            Verdict::Undetermined,
            None,
            "no path grants or bans this request".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::obligation::Event;

    #[test]
    fn isolated_nodes_leave_everything_undetermined() {
        let mut g = PolicyGraph::new();
        g.add_node(EntityRef::Principal("p".into()));
        g.add_node(EntityRef::Action("a".into()));
        g.add_node(EntityRef::Resource("r1".into()));
        g.add_node(EntityRef::Resource("r2".into()));
        let rel = extract_policy(&g).unwrap();
        assert!(rel.par.is_empty() && rel.bar.is_empty() && rel.pca.is_empty());
        assert_eq!(rel.undet.len(), 2);
        let d = decide(&g, "p", "a", "r1").unwrap();
        assert_eq!(d.verdict, Verdict::Undetermined);
        assert!(d.path.is_empty());
        assert!(matches!(decide(&g, "q", "a", "r1"), Err(PolicyError::UnknownEntity { .. })));
    }

    #[test]
    fn histories_are_maximal_chains() {
        let mut g = PolicyGraph::new();
        let e1 = g.add_event(&Event::new("e1", "s", "a", "o", 1), false);
        let e2 = g.add_event(&Event::new("e2", "s", "a", "o", 2), false);
        let e3 = g.add_event(&Event::new("e3", "s", "a", "o", 3), true);
        g.add_event(&Event::new("lone", "s", "a", "o", 9), false);
        g.connect(e1, e2, EdgeKind::EE).unwrap();
        g.connect(e2, e3, EdgeKind::EE).unwrap();
        let rel = extract_policy(&g).unwrap();
        let chain: Vec<String> = ["e1", "e2", "e3"].map(String::from).to_vec();
        assert_eq!(rel.histories, [chain.clone(), vec!["lone".to_string()]].into());
        assert_eq!(rel.ei.len(), 3);
        assert!(rel.ei.contains(&("e1".into(), "e3".into(), chain)));
    }
}
