use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::event::{event_matches_scheme, Event};
use super::ObligationError;
use crate::policy::extract::history_chains;
use crate::policy::path::reach;
use crate::policy::validate::patterns;
use crate::policy::{DutySpec, EdgeKind, EntityRef, GenericObligation, NodeType, Phase, PolicyGraph, TypedView};
use crate::portgraph::{NodeId, Value};

/// A duty issued while walking the history.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Duty {
    pub id: usize,
    pub spec: DutySpec,
    /// The generic obligation the duty was issued from.
    pub obligation: GenericObligation,
    /// The `D` node representing the duty.
    pub node: NodeId,
    /// History position of the start event; 0 is the implicit ⊥ event.
    pub start_pos: usize,
    /// History position of the end event, once it has happened.
    pub end_pos: Option<usize>,
    /// Scheme variables bound by the start event.
    #[serde(default)]
    pub bindings: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "lowercase")]
pub enum DutyState {
    Pending,
    Fulfilled { event: String, time: i64 },
    Violated,
}

impl DutyState {
    pub fn tag(&self) -> &'static str {
        match self {
            DutyState::Pending => "pending",
            DutyState::Fulfilled { .. } => "fulfilled",
            DutyState::Violated => "violated",
        }
    }
}

/// What processing one event changed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepReport {
    /// Id of the processed event; `None` when the event was already
    /// processed and nothing happened.
    pub event: Option<String>,
    /// Ids of duties issued by the event.
    pub issued: Vec<usize>,
    /// Ids of duties whose end event this was.
    pub closed: Vec<usize>,
    /// `(duty, before, after)` for every duty whose state changed.
    pub changes: Vec<(usize, DutyState, DutyState)>,
}

/// A policy graph walked along one history.
///
/// The history is the `→EE` chain holding the `now` event. Its first
/// `processed` events have happened; the `now` marker sits on the next event
/// to process, or on the last one once everything is processed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationState {
    graph: PolicyGraph,
    chain: Vec<NodeId>,
    processed: usize,
    duties: Vec<Duty>,
}

impl SimulationState {
    /// Start from a graph, treating the events before the `now` event as
    /// already processed. Without a `now` event nothing is processed.
    pub fn new(graph: PolicyGraph) -> Result<Self, ObligationError> {
        let chain = current_chain(&graph);
        let processed = graph.now_node().and_then(|n| chain.iter().position(|m| *m == n)).unwrap_or(0);
        Self::starting_at(graph, processed)
    }

    /// Start from a graph with the first `processed` events of the current
    /// history already processed.
    pub fn starting_at(graph: PolicyGraph, processed: usize) -> Result<Self, ObligationError> {
        let chain = current_chain(&graph);
        let mut s = SimulationState { graph, chain, processed: 0, duties: Vec::new() };
        s.issue_unconditional();
        for _ in 0..processed.min(s.chain.len()) {
            s.advance()?;
        }
        s.place_now();
        Ok(s)
    }

    pub fn graph(&self) -> &PolicyGraph {
        &self.graph
    }

    pub fn duties(&self) -> &[Duty] {
        &self.duties
    }

    pub fn processed(&self) -> usize {
        self.processed
    }

    /// Events of the current history in order.
    pub fn history(&self) -> Vec<Event> {
        self.chain.iter().filter_map(|n| self.graph.event(*n)).collect()
    }

    /// The processed prefix of the history.
    pub fn processed_events(&self) -> Vec<Event> {
        self.history().into_iter().take(self.processed).collect()
    }

    /// The next event to process, if any.
    pub fn next_event(&self) -> Option<Event> {
        self.chain.get(self.processed).and_then(|n| self.graph.event(*n))
    }

    pub fn duty(&self, id: usize) -> Result<&Duty, ObligationError> {
        self.duties.get(id).ok_or(ObligationError::UnknownDuty(id))
    }

    /// State of a duty in the processed history.
    ///
    /// Positions are strict: the fulfilling event must come after the start
    /// event and before the end event. The earliest such event is reported.
    pub fn duty_state(&self, id: usize) -> Result<DutyState, ObligationError> {
        let d = self.duty(id)?;
        let history = self.processed_events();
        let upper = d.end_pos.map_or(self.processed, |e| (e - 1).min(self.processed));
        for pos in d.start_pos + 1..=upper {
            let e = &history[pos - 1];
            if e.subj == d.spec.principal && e.act == d.spec.action && e.obj == d.spec.resource {
                return Ok(DutyState::Fulfilled { event: e.id.clone(), time: e.time });
            }
        }
        Ok(if d.end_pos.is_some_and(|e| e <= self.processed) { DutyState::Violated } else { DutyState::Pending })
    }

    fn states(&self) -> Vec<DutyState> {
        (0..self.duties.len()).map(|i| self.duty_state(i).expect("known duty")).collect()
    }

    /// Process the next scheduled event.
    pub fn advance(&mut self) -> Result<StepReport, ObligationError> {
        if self.processed >= self.chain.len() {
            return Err(ObligationError::NothingScheduled);
        }
        let before = self.states();
        self.processed += 1;
        let pos = self.processed;
        let node = self.chain[pos - 1];
        let event = self.graph.event(node).expect("history holds events");
        let v = self.graph.view();
        let instantiated = reach(&v, node, &patterns().et, false);
        let mut report = StepReport { event: Some(event.id.clone()), ..Default::default() };

        for i in 0..self.duties.len() {
            let d = &self.duties[i];
            if d.end_pos.is_some() || pos <= d.start_pos {
                continue;
            }
            let Some(end) = d.obligation.end.clone() else { continue };
            let Some(g) = v.find(&EntityRef::Scheme(end.clone())) else { continue };
            if !instantiated.contains(&g) || !self.shared_bindings_agree(d, &event, g) {
                continue;
            }
            let d = &mut self.duties[i];
            d.end_pos = Some(pos);
            d.spec.end = Some(event.id.clone());
            let (old, spec) = (d.node, d.spec.clone());
            let dn = self.duty_node(&spec)?;
            self.duties[i].node = dn;
            self.release(old);
            report.closed.push(i);
        }

        for (p, o) in opa_pairs(&v) {
            let EntityRef::Obligation(ob) = v.nodes[&o].ent.clone() else { unreachable!() };
            let Some(start) = ob.start.clone() else { continue };
            let Some(g) = v.find(&EntityRef::Scheme(start)) else { continue };
            if !instantiated.contains(&g) {
                continue;
            }
            let bindings = self
                .graph
                .scheme(g)
                .and_then(|ge| event_matches_scheme(&event, &ge))
                .unwrap_or_default();
            let id = self.issue(p, ob, Some((pos, &event)), bindings)?;
            report.issued.extend(id);
        }

        self.place_now();
        let after = self.states();
        for (i, a) in after.into_iter().enumerate() {
            match before.get(i) {
                Some(b) if *b == a => {}
                Some(b) => report.changes.push((i, b.clone(), a)),
                None => report.changes.push((i, DutyState::Pending, a)),
            }
        }
        Ok(report)
    }

    /// Add an event to the history and process it.
    ///
    /// The next scheduled event is simply processed. Re-injecting an already
    /// processed event is a no-op. A new event is appended to the history,
    /// which is only allowed once no scheduled events remain.
    pub fn inject_event(&mut self, e: Event) -> Result<StepReport, ObligationError> {
        if let Some(next) = self.next_event() {
            if next == e {
                return self.advance();
            }
        }
        if let Some(n) = self.graph.find(&EntityRef::Event(e.id.clone())) {
            let pos = self.chain.iter().position(|m| *m == n);
            if pos.is_some_and(|p| p < self.processed) && self.graph.event(n).as_ref() == Some(&e) {
                return Ok(StepReport::default());
            }
            return Err(ObligationError::DuplicateEvent(e.id));
        }
        if let Some(next) = self.next_event() {
            return Err(ObligationError::ScheduledEventsPending { next: next.id });
        }
        if let Some(last) = self.chain.last().and_then(|n| self.graph.event(*n)) {
            if e.time < last.time {
                return Err(ObligationError::TimeRegression { event: e.id, time: e.time, last: last.time });
            }
        }
        let n = self.graph.add_event(&e, false);
        if let Some(prev) = self.chain.last() {
            self.graph.connect(*prev, n, EdgeKind::EE)?;
        }
        link_event(&mut self.graph, n)?;
        self.chain.push(n);
        self.advance()
    }

    fn place_now(&mut self) {
        let now = self.chain.get(self.processed).or(self.chain.last()).copied();
        self.graph.set_now(now);
    }

    fn issue_unconditional(&mut self) {
        let v = self.graph.view();
        for (p, o) in opa_pairs(&v) {
            let EntityRef::Obligation(ob) = v.nodes[&o].ent.clone() else { unreachable!() };
            if ob.start.is_none() {
                self.issue(p, ob, None, BTreeMap::new()).expect("typed nodes");
            }
        }
    }

    fn issue(
        &mut self,
        p: NodeId,
        ob: GenericObligation,
        start: Option<(usize, &Event)>,
        bindings: BTreeMap<String, Value>,
    ) -> Result<Option<usize>, ObligationError> {
        let principal = self.graph.ent(p).expect("principal").name();
        let start_pos = start.map_or(0, |s| s.0);
        let spec = DutySpec {
            principal,
            action: ob.action.clone(),
            resource: ob.resource.clone(),
            start: start.map(|s| s.1.id.clone()),
            end: None,
        };
        if self.duties.iter().any(|d| d.spec == spec && d.obligation == ob) {
            return Ok(None);
        }
        let dn = self.duty_node(&spec)?;
        let id = self.duties.len();
        self.duties.push(Duty { id, spec, obligation: ob, node: dn, start_pos, end_pos: None, bindings });
        Ok(Some(id))
    }

    /// The `D` node for a duty specification, created with its `DP`, `DPr`
    /// and `DE` edges on first use. Duties from different obligations can
    /// share a specification and then share the node.
    fn duty_node(&mut self, spec: &DutySpec) -> Result<NodeId, ObligationError> {
        let ent = EntityRef::Duty(spec.clone());
        if let Some(n) = self.graph.find(&ent) {
            return Ok(n);
        }
        let dn = self.graph.add_node(ent);
        let p = self.graph.find(&EntityRef::Principal(spec.principal.clone())).expect("duty principal");
        self.graph.connect(dn, p, EdgeKind::DP)?;
        let pr = ensure_permission(&mut self.graph, &spec.action, &spec.resource)?;
        self.graph.connect(dn, pr, EdgeKind::DPr)?;
        for (ev, phase) in [(&spec.start, Phase::I), (&spec.end, Phase::F)] {
            if let Some(en) = ev.as_ref().and_then(|id| self.graph.find(&EntityRef::Event(id.clone()))) {
                self.graph.connect(dn, en, EdgeKind::DE(phase))?;
            }
        }
        Ok(dn)
    }

    /// Drop a `D` node no duty refers to any more.
    fn release(&mut self, dn: NodeId) {
        if !self.duties.iter().any(|d| d.node == dn) {
            self.graph.remove_node(dn);
        }
    }

    /// Variables shared by the start and end schemes must take the same
    /// values in the start and end events.
    fn shared_bindings_agree(&self, d: &Duty, e: &Event, end_scheme: NodeId) -> bool {
        let Some(ge) = self.graph.scheme(end_scheme) else { return true };
        let Some(b) = event_matches_scheme(e, &ge) else { return true };
        b.iter().all(|(k, v)| d.bindings.get(k).is_none_or(|w| w == v))
    }
}

/// The history a simulation walks: the chain holding the `now` event, or
/// else the longest chain (first in id order among equals).
fn current_chain(g: &PolicyGraph) -> Vec<NodeId> {
    let v = g.view();
    let chains = history_chains(&v);
    if let Some(now) = g.now_node() {
        if let Some(c) = chains.iter().find(|c| c.contains(&now)) {
            return c.clone();
        }
    }
    let mut best: Vec<NodeId> = Vec::new();
    for c in chains {
        if c.len() > best.len() {
            best = c;
        }
    }
    best
}

/// `(p, o)` node pairs of `OPA`, sorted.
fn opa_pairs(v: &TypedView) -> Vec<(NodeId, NodeId)> {
    let pats = patterns();
    let mut out = Vec::new();
    for p in v.of_type(NodeType::P) {
        for o in reach(v, p, &pats.opa, false) {
            out.push((p, o));
        }
    }
    out
}

fn ensure_permission(g: &mut PolicyGraph, action: &str, resource: &str) -> Result<NodeId, ObligationError> {
    let ent = EntityRef::Permission { action: action.into(), resource: resource.into() };
    if let Some(n) = g.find(&ent) {
        return Ok(n);
    }
    let pr = g.add_node(ent);
    if let Some(a) = g.find(&EntityRef::Action(action.into())) {
        g.connect(pr, a, EdgeKind::PrA)?;
    }
    if let Some(r) = g.find(&EntityRef::Resource(resource.into())) {
        g.connect(pr, r, EdgeKind::PrR)?;
    }
    Ok(pr)
}

/// Connect an event node to what it mentions: `EG` edges to the most
/// specific schemes it instantiates (those no other instantiated scheme
/// specializes), and `EP`/`EA`/`ER` edges to its subject, action and object
/// when the graph has them.
pub fn link_event(g: &mut PolicyGraph, n: NodeId) -> Result<(), ObligationError> {
    let Some(e) = g.event(n) else { return Ok(()) };
    let matching: BTreeSet<NodeId> = g
        .nodes_of(NodeType::G)
        .into_iter()
        .filter(|s| g.scheme(*s).is_some_and(|ge| event_matches_scheme(&e, &ge).is_some()))
        .collect();
    let v = g.view();
    let gg = crate::policy::Pattern::parse("(→GG)*").expect("pattern");
    let mut more_general: BTreeSet<NodeId> = BTreeSet::new();
    for s in &matching {
        more_general.extend(reach(&v, *s, &gg, false).into_iter().filter(|t| t != s));
    }
    for s in matching.difference(&more_general) {
        g.connect(n, *s, EdgeKind::EG)?;
    }
    let links = [
        (EntityRef::Principal(e.subj.clone()), EdgeKind::EP),
        (EntityRef::Action(e.act.clone()), EdgeKind::EA),
        (EntityRef::Resource(e.obj.clone()), EdgeKind::ER),
    ];
    for (ent, kind) in links {
        if let Some(m) = g.find(&ent) {
            g.connect(n, m, kind)?;
        }
    }
    Ok(())
}
