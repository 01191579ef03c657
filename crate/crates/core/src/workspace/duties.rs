use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::obligation::{DutyState, SimulationState};
use crate::policy::{DutySpec, GenericObligation};

/// Which duties a report lists. `None` fields match everything.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DutyFilter {
    #[serde(default)]
    pub principal: Option<String>,
    /// `pending`, `fulfilled` or `violated`.
    #[serde(default)]
    pub state: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DutyEntry {
    pub id: usize,
    pub spec: DutySpec,
    pub state: DutyState,
    /// The generic obligation the duty was issued from.
    pub obligation: GenericObligation,
    /// The event that issued the duty; `None` for a duty issued at the start
    /// of the history.
    pub trigger: Option<String>,
    pub trigger_time: Option<i64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DutyReport {
    pub duties: Vec<DutyEntry>,
    /// Number of listed duties per state tag.
    pub counts: BTreeMap<String, usize>,
}

/// Duties of the simulation whose principal and current state pass the
/// filter, in issue order.
pub fn query_duties(state: &SimulationState, filter: &DutyFilter) -> DutyReport {
    let history = state.history();
    let mut report = DutyReport::default();
    for d in state.duties() {
        let s = state.duty_state(d.id).expect("listed duty exists");
        if filter.principal.as_ref().is_some_and(|p| *p != d.spec.principal)
            || filter.state.as_ref().is_some_and(|t| t != s.tag())
        {
            continue;
        }
        let trigger = d.start_pos.checked_sub(1).and_then(|i| history.get(i));
        *report.counts.entry(s.tag().to_string()).or_default() += 1;
        report.duties.push(DutyEntry {
            id: d.id,
            spec: d.spec.clone(),
            state: s,
            obligation: d.obligation.clone(),
            trigger: trigger.map(|e| e.id.clone()),
            trigger_time: trigger.map(|e| e.time),
        });
    }
    report
}
