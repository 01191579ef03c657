use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::OnceLock;

use serde::Serialize;

use super::entity::{Auth, EdgeKind, EntityRef, NodeType};
use super::path::{constrained_paths, reach, Pattern};
use super::typed::TypedView;
use super::PolicyGraph;
use crate::portgraph::{EdgeId, NodeId};

/// A reason a policy graph is not well-formed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind")]
pub enum Violation {
    IllTypedNode { node: NodeId, reason: String },
    IllTypedEdge { edge: EdgeId, reason: String },
    DuplicateEntity { ty: NodeType, ent: String, nodes: Vec<NodeId> },
    /// Parallel edges other than one `CPrᴬ` plus one `CPrᴮ`.
    DuplicateEdge { edges: Vec<EdgeId> },
    RedundantEdge { edge: EdgeId, clause: String },
    GrantBanConflict { principal: String, action: String, resource: String },
    MultipleNow { nodes: Vec<NodeId> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::IllTypedNode { node, reason } => write!(f, "node {node} is ill-typed: {reason}"),
            Violation::IllTypedEdge { edge, reason } => write!(f, "edge {edge} is ill-typed: {reason}"),
            Violation::DuplicateEntity { ty, ent, nodes } => {
                write!(f, "{ty} `{ent}` is represented by {} nodes", nodes.len())
            }
            Violation::DuplicateEdge { edges } => {
                write!(f, "{} parallel edges join the same nodes", edges.len())
            }
            Violation::RedundantEdge { edge, clause } => {
                write!(f, "edge {edge} ({clause}) is implied by a longer path")
            }
            Violation::GrantBanConflict { principal, action, resource } => {
                write!(f, "{principal} is both granted and banned {action} on {resource}")
            }
            Violation::MultipleNow { nodes } => write!(f, "{} events are marked now", nodes.len()),
        }
    }
}

pub(crate) struct Patterns {
    pub par: Pattern,
    pub bar: Pattern,
    pub opa: Pattern,
    pub et: Pattern,
    pub sub_auth: Pattern,
    pub sub_obl: Pattern,
    pc_red: Pattern,
    cpr_a_red: Pattern,
    cpr_b_red: Pattern,
    co_red: Pattern,
    gg_red: Pattern,
}

pub(crate) fn patterns() -> &'static Patterns {
    static P: OnceLock<Patterns> = OnceLock::new();
    P.get_or_init(|| {
        let p = |s: &str| Pattern::parse(s).expect("built-in pattern");
        Patterns {
            par: p("PC, (→CC_Pr)*, CPrᴬ"),
            bar: p("PC, (←CC_Pr)*, CPrᴮ"),
            opa: p("PC, (→CC_O)*, CO"),
            et: p("EG, (→GG)*"),
            sub_auth: p("(→CC_Pr)*"),
            sub_obl: p("(→CC_O)*"),
            pc_red: p("PC, (→CC)*"),
            cpr_a_red: p("(→CC_Pr)*, CPrᴬ"),
            cpr_b_red: p("(←CC_Pr)*, CPrᴮ"),
            co_red: p("(→CC_O)*, CO"),
            gg_red: p("(→GG)*"),
        }
    })
}

fn has_longer_path(v: &TypedView, from: NodeId, to: NodeId, pat: &Pattern, inverse: bool) -> bool {
    constrained_paths(v, from, pat, inverse).iter().any(|p| p.end() == to && p.len() >= 2)
}

/// Edges for which a parallel path of length ≥ 2 and the matching type
/// exists, each with the clause that makes it redundant.
pub(crate) fn redundant_edges(v: &TypedView) -> BTreeMap<EdgeId, String> {
    let pats = patterns();
    let mut out = BTreeMap::new();
    for e in &v.edges {
        let [x, y] = e.ends;
        let tx = v.ty(x).expect("typed");
        // (source, destination) oriented by the lead type of each clause
        let lead = |t: NodeType| if tx == t { (x, y) } else { (y, x) };
        let hit: Option<&str> = match e.kind {
            EdgeKind::PC => {
                let (p, c) = lead(NodeType::P);
                has_longer_path(v, p, c, &pats.pc_red, false).then_some("PC")
            }
            EdgeKind::CC { auth, obl } => {
                let mut clause = None;
                for (a, b) in [(x, y), (y, x)] {
                    if !e.target.contains(&b) || a == b {
                        continue;
                    }
                    if auth && has_longer_path(v, a, b, &pats.sub_auth, false) {
                        clause = Some("→CC_Pr");
                    } else if obl && has_longer_path(v, a, b, &pats.sub_obl, false) {
                        clause = Some("→CC_O");
                    }
                    if clause.is_some() {
                        break;
                    }
                }
                clause
            }
            EdgeKind::CPr(Auth::A) => {
                let (c, pr) = lead(NodeType::C);
                has_longer_path(v, c, pr, &pats.cpr_a_red, false).then_some("CPrᴬ")
            }
            EdgeKind::CPr(Auth::B) => {
                let (c, pr) = lead(NodeType::C);
                has_longer_path(v, c, pr, &pats.cpr_b_red, true).then_some("CPrᴮ")
            }
            EdgeKind::CO => {
                let (c, o) = lead(NodeType::C);
                has_longer_path(v, c, o, &pats.co_red, false).then_some("CO")
            }
            EdgeKind::EG => {
                let (ev, g) = lead(NodeType::E);
                has_longer_path(v, ev, g, &pats.et, false).then_some("EG")
            }
            EdgeKind::GG => [(x, y), (y, x)]
                .into_iter()
                .any(|(a, b)| a != b && e.target.contains(&b) && has_longer_path(v, a, b, &pats.gg_red, false))
                .then_some("→GG"),
            _ => None,
        };
        if let Some(c) = hit {
            out.insert(e.id, c.to_string());
        }
    }
    out
}

/// Edges made redundant by a longer typed path.
pub fn find_redundant_edges(g: &PolicyGraph) -> BTreeSet<EdgeId> {
    redundant_edges(&g.view()).into_keys().collect()
}

/// Principal-permission pairs reachable both as a grant and as a ban.
pub(crate) fn grant_ban_conflicts(v: &TypedView) -> Vec<(NodeId, NodeId)> {
    let pats = patterns();
    let mut out = Vec::new();
    for p in v.of_type(NodeType::P) {
        let granted = reach(v, p, &pats.par, false);
        let banned = reach(v, p, &pats.bar, true);
        out.extend(granted.intersection(&banned).map(|pr| (p, *pr)));
    }
    out
}

/// Every well-formedness violation, sorted. An empty list means the graph is
/// well-formed.
pub fn validate(g: &PolicyGraph) -> Vec<Violation> {
    let v = g.view();
    let mut out = v.errors.clone();

    let mut by_ent: BTreeMap<(NodeType, String), Vec<NodeId>> = BTreeMap::new();
    for (n, t) in &v.nodes {
        by_ent.entry((t.ty, t.ent.to_value().to_string())).or_default().push(*n);
    }
    for ((ty, _), nodes) in by_ent {
        if nodes.len() > 1 {
            let ent = v.nodes[&nodes[0]].ent.name();
            out.push(Violation::DuplicateEntity { ty, ent, nodes });
        }
    }

    let mut by_pair: BTreeMap<[NodeId; 2], Vec<usize>> = BTreeMap::new();
    for (i, e) in v.edges.iter().enumerate() {
        let mut k = e.ends;
        k.sort();
        by_pair.entry(k).or_default().push(i);
    }
    for group in by_pair.values().filter(|g| g.len() > 1) {
        let kinds: Vec<EdgeKind> = group.iter().map(|i| v.edges[*i].kind).collect();
        let allowed = kinds.len() == 2
            && matches!((kinds[0], kinds[1]), (EdgeKind::CPr(a), EdgeKind::CPr(b)) if a != b);
        if !allowed {
            out.push(Violation::DuplicateEdge { edges: group.iter().map(|i| v.edges[*i].id).collect() });
        }
    }

    for (edge, clause) in redundant_edges(&v) {
        out.push(Violation::RedundantEdge { edge, clause });
    }

    for (p, pr) in grant_ban_conflicts(&v) {
        let (EntityRef::Principal(principal), EntityRef::Permission { action, resource }) =
            (&v.nodes[&p].ent, &v.nodes[&pr].ent)
        else {
            unreachable!("typed view")
        };
        out.push(Violation::GrantBanConflict {
            principal: principal.clone(),
            action: action.clone(),
            resource: resource.clone(),
        });
    }

    let now: Vec<NodeId> = v.nodes.iter().filter(|(_, t)| t.now).map(|(n, _)| *n).collect();
    if now.len() > 1 {
        out.push(Violation::MultipleNow { nodes: now });
    }
    out.sort();
    out
}
