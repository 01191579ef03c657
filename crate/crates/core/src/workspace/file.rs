use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::WorkspaceError;
use crate::obligation::{link_event, Event, EventScheme, SimulationState};
use crate::policy::extract::history_chains;
use crate::policy::{Auth, EdgeKind, EntityRef, GenericObligation, NodeType, Phase, PolicyGraph};
use crate::portgraph::NodeId;

type Pair = (String, String);
type Triple = (String, String, String);
/// `(action, resource, start scheme, end scheme, category)`.
type OcaEntry = (String, String, Option<String>, Option<String>, String);

/// The declarative policy file: entity lists plus relation lists.
///
/// `pca` holds `(principal, category)`, `arca`/`barca` hold
/// `(action, resource, category)`, `cc_auth`/`cc_obl` hold
/// `(sub-category, super-category)` and `gg` holds
/// `(specific scheme, general scheme)`. Each history lists event ids in
/// order. `now` names the current event; `processed`, when present, is the
/// number of events of the current history already processed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyFile {
    #[serde(default)]
    pub principals: Vec<String>,
    #[serde(default)]
    pub categories: Vec<String>,
    #[serde(default)]
    pub actions: Vec<String>,
    #[serde(default)]
    pub resources: Vec<String>,
    #[serde(default)]
    pub schemes: Vec<EventScheme>,
    #[serde(default)]
    pub events: Vec<Event>,
    #[serde(default)]
    pub histories: Vec<Vec<String>>,
    #[serde(default)]
    pub pca: Vec<Pair>,
    #[serde(default)]
    pub arca: Vec<Triple>,
    #[serde(default)]
    pub barca: Vec<Triple>,
    #[serde(default)]
    pub oca: Vec<OcaEntry>,
    #[serde(default)]
    pub cc_auth: Vec<Pair>,
    #[serde(default)]
    pub cc_obl: Vec<Pair>,
    #[serde(default)]
    pub gg: Vec<Pair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub now: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub processed: Option<usize>,
}

fn type_error(entity: impl Into<String>, reason: impl Into<String>) -> WorkspaceError {
    WorkspaceError::Type { entity: entity.into(), reason: reason.into() }
}

struct Builder {
    g: PolicyGraph,
    ids: BTreeMap<(NodeType, String), NodeId>,
}

impl Builder {
    fn declare(&mut self, ent: EntityRef) -> Result<NodeId, WorkspaceError> {
        let key = (ent.node_type(), ent.name());
        if self.ids.contains_key(&key) {
            return Err(type_error(ent.name(), format!("{} declared twice", ent.node_type().word())));
        }
        let n = self.g.add_node(ent);
        self.ids.insert(key, n);
        Ok(n)
    }

    fn get(&self, ty: NodeType, name: &str, context: &str) -> Result<NodeId, WorkspaceError> {
        self.ids
            .get(&(ty, name.to_string()))
            .copied()
            .ok_or_else(|| type_error(name, format!("unknown {} in {context}", ty.word())))
    }

    /// The `Pr` node for `(action, resource)`, created on first use.
    fn permission(&mut self, action: &str, resource: &str, context: &str) -> Result<NodeId, WorkspaceError> {
        let a = self.get(NodeType::A, action, context)?;
        let r = self.get(NodeType::R, resource, context)?;
        let ent = EntityRef::Permission { action: action.into(), resource: resource.into() };
        if let Some(n) = self.g.find(&ent) {
            return Ok(n);
        }
        let pr = self.g.add_node(ent);
        self.g.connect(pr, a, EdgeKind::PrA)?;
        self.g.connect(pr, r, EdgeKind::PrR)?;
        Ok(pr)
    }
}

impl PolicyFile {
    pub fn parse(bytes: &[u8]) -> Result<PolicyFile, WorkspaceError> {
        serde_json::from_slice(bytes).map_err(|e| WorkspaceError::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> Vec<u8> {
        serde_json::to_vec_pretty(self).expect("policy files serialize")
    }

    /// Build the policy graph. `Pr` nodes are synthesized for every permission
    /// a relation mentions, and events are linked to the schemes they
    /// instantiate and to their subject, action and object.
    pub fn build(&self) -> Result<PolicyGraph, WorkspaceError> {
        let mut b = Builder { g: PolicyGraph::new(), ids: BTreeMap::new() };
        for p in &self.principals {
            b.declare(EntityRef::Principal(p.clone()))?;
        }
        for c in &self.categories {
            b.declare(EntityRef::Category(c.clone()))?;
        }
        for a in &self.actions {
            b.declare(EntityRef::Action(a.clone()))?;
        }
        for r in &self.resources {
            b.declare(EntityRef::Resource(r.clone()))?;
        }
        for s in &self.schemes {
            if b.ids.contains_key(&(NodeType::G, s.name().to_string())) {
                return Err(type_error(s.name(), "scheme declared twice"));
            }
            let n = b.g.add_scheme(s);
            b.ids.insert((NodeType::G, s.name().to_string()), n);
        }
        for (x, y) in &self.gg {
            let (gx, gy) = (b.get(NodeType::G, x, "gg")?, b.get(NodeType::G, y, "gg")?);
            b.g.connect(gx, gy, EdgeKind::GG)?;
        }

        for (list, auth, name) in [(&self.arca, Auth::A, "arca"), (&self.barca, Auth::B, "barca")] {
            for (a, r, c) in list {
                let cn = b.get(NodeType::C, c, name)?;
                let pr = b.permission(a, r, name)?;
                b.g.connect(cn, pr, EdgeKind::CPr(auth))?;
            }
        }
        for (a, r, g1, g2, c) in &self.oca {
            let cn = b.get(NodeType::C, c, "oca")?;
            let ob = GenericObligation { action: a.clone(), resource: r.clone(), start: g1.clone(), end: g2.clone() };
            let ent = EntityRef::Obligation(ob);
            let o = match b.g.find(&ent) {
                Some(o) => o,
                None => {
                    let pr = b.permission(a, r, "oca")?;
                    let o = b.g.add_node(ent);
                    b.g.connect(o, pr, EdgeKind::OPr)?;
                    for (ge, phase) in [(g1, Phase::I), (g2, Phase::F)] {
                        if let Some(ge) = ge {
                            let gn = b.get(NodeType::G, ge, "oca")?;
                            b.g.connect(o, gn, EdgeKind::OG(phase))?;
                        }
                    }
                    o
                }
            };
            b.g.connect(cn, o, EdgeKind::CO)?;
        }
        for (p, c) in &self.pca {
            let (pn, cn) = (b.get(NodeType::P, p, "pca")?, b.get(NodeType::C, c, "pca")?);
            b.g.connect(pn, cn, EdgeKind::PC)?;
        }
        self.build_cc(&mut b)?;

        let now = self.now.as_deref();
        if let Some(id) = now {
            if !self.events.iter().any(|e| e.id == id) {
                return Err(type_error(id, "`now` names an unknown event"));
            }
        }
        let mut events = Vec::new();
        for e in &self.events {
            if b.ids.contains_key(&(NodeType::E, e.id.clone())) {
                return Err(type_error(&e.id, "event declared twice"));
            }
            let n = b.g.add_event(e, Some(e.id.as_str()) == now);
            b.ids.insert((NodeType::E, e.id.clone()), n);
            events.push(n);
        }
        let mut linked = BTreeSet::new();
        for h in &self.histories {
            let nodes = h.iter().map(|id| b.get(NodeType::E, id, "histories")).collect::<Result<Vec<_>, _>>()?;
            for w in nodes.windows(2) {
                if w[0] == w[1] {
                    return Err(type_error(b.g.ent(w[0]).expect("event").name(), "event follows itself"));
                }
                if linked.insert((w[0], w[1])) {
                    b.g.connect(w[0], w[1], EdgeKind::EE)?;
                }
            }
        }
        for n in events {
            link_event(&mut b.g, n)?;
        }
        Ok(b.g)
    }

    /// One `CC` edge per related pair. A pair related both ways with the same
    /// flags becomes a single edge whose target holds both categories.
    fn build_cc(&self, b: &mut Builder) -> Result<(), WorkspaceError> {
        let mut flags: BTreeMap<(NodeId, NodeId), (bool, bool)> = BTreeMap::new();
        for (list, name, is_auth) in [(&self.cc_auth, "cc_auth", true), (&self.cc_obl, "cc_obl", false)] {
            for (x, y) in list {
                let k = (b.get(NodeType::C, x, name)?, b.get(NodeType::C, y, name)?);
                if k.0 == k.1 {
                    return Err(type_error(x, format!("category related to itself in {name}")));
                }
                let f = flags.entry(k).or_default();
                if is_auth {
                    f.0 = true;
                } else {
                    f.1 = true;
                }
            }
        }
        let mut done = BTreeSet::new();
        for (&(x, y), &(auth, obl)) in &flags {
            if done.contains(&(x, y)) {
                continue;
            }
            if flags.get(&(y, x)) == Some(&(auth, obl)) {
                b.g.connect_cc(x, y, &[x, y], auth, obl)?;
                done.insert((y, x));
            } else {
                b.g.connect_cc(x, y, &[y], auth, obl)?;
            }
        }
        Ok(())
    }

    /// The file describing a graph. Auxiliary edges, duties and everything
    /// the loader derives (`Pr` nodes, event links) are left out.
    pub fn from_graph(g: &PolicyGraph) -> PolicyFile {
        let v = g.view();
        let name = |n: NodeId| v.nodes[&n].ent.name();
        let names = |ty: NodeType| {
            let mut out: Vec<String> = v.of_type(ty).map(name).collect();
            out.sort();
            out
        };
        let mut f = PolicyFile {
            principals: names(NodeType::P),
            categories: names(NodeType::C),
            actions: names(NodeType::A),
            resources: names(NodeType::R),
            ..PolicyFile::default()
        };
        let mut schemes: Vec<EventScheme> = v.of_type(NodeType::G).filter_map(|n| g.scheme(n)).collect();
        schemes.sort_by(|a, b| a.name().cmp(b.name()));
        f.schemes = schemes;
        let mut events: Vec<Event> = v.of_type(NodeType::E).filter_map(|n| g.event(n)).collect();
        events.sort_by(|a, b| (a.time, &a.id).cmp(&(b.time, &b.id)));
        f.events = events;
        let mut histories: Vec<Vec<String>> =
            history_chains(&v).into_iter().filter(|h| h.len() > 1).map(|h| h.into_iter().map(name).collect()).collect();
        histories.sort();
        f.histories = histories;

        let typed = |n: NodeId, ty: NodeType| v.ty(n) == Some(ty);
        let (mut cc_auth, mut cc_obl) = (BTreeSet::new(), BTreeSet::new());
        let (mut pca, mut arca, mut barca, mut oca, mut gg) =
            (BTreeSet::new(), BTreeSet::new(), BTreeSet::new(), BTreeSet::new(), BTreeSet::new());
        for e in &v.edges {
            let [x, y] = e.ends;
            let orient = |ty: NodeType| if typed(x, ty) { (x, y) } else { (y, x) };
            match e.kind {
                EdgeKind::PC => {
                    let (p, c) = orient(NodeType::P);
                    pca.insert((name(p), name(c)));
                }
                EdgeKind::CPr(auth) => {
                    let (c, pr) = orient(NodeType::C);
                    let EntityRef::Permission { action, resource } = &v.nodes[&pr].ent else { continue };
                    let t = (action.clone(), resource.clone(), name(c));
                    if auth == Auth::A {
                        arca.insert(t);
                    } else {
                        barca.insert(t);
                    }
                }
                EdgeKind::CO => {
                    let (c, o) = orient(NodeType::C);
                    let EntityRef::Obligation(ob) = &v.nodes[&o].ent else { continue };
                    oca.insert((ob.action.clone(), ob.resource.clone(), ob.start.clone(), ob.end.clone(), name(c)));
                }
                EdgeKind::CC { auth, obl } => {
                    for t in &e.target {
                        let s = e.other(*t);
                        if auth {
                            cc_auth.insert((name(s), name(*t)));
                        }
                        if obl {
                            cc_obl.insert((name(s), name(*t)));
                        }
                    }
                }
                EdgeKind::GG => {
                    if let Some(t) = e.target.iter().next() {
                        gg.insert((name(e.other(*t)), name(*t)));
                    }
                }
                _ => {}
            }
        }
        f.pca = pca.into_iter().collect();
        f.arca = arca.into_iter().collect();
        f.barca = barca.into_iter().collect();
        f.oca = oca.into_iter().collect();
        f.cc_auth = cc_auth.into_iter().collect();
        f.cc_obl = cc_obl.into_iter().collect();
        f.gg = gg.into_iter().collect();
        f.now = g.now_node().map(name);
        f
    }
}

/// Parse a policy file and build its graph.
pub fn load_policy(bytes: &[u8]) -> Result<PolicyGraph, WorkspaceError> {
    PolicyFile::parse(bytes)?.build()
}

/// Serialize a graph as a policy file.
pub fn save_policy(g: &PolicyGraph) -> Vec<u8> {
    PolicyFile::from_graph(g).to_json()
}

/// Parse a policy file and walk its current history up to `processed`
/// events, or up to the `now` event when `processed` is absent.
pub fn load_simulation(bytes: &[u8]) -> Result<SimulationState, WorkspaceError> {
    let f = PolicyFile::parse(bytes)?;
    let g = f.build()?;
    Ok(match f.processed {
        Some(k) => SimulationState::starting_at(g, k)?,
        None => SimulationState::new(g)?,
    })
}
