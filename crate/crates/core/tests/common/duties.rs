//! A two-obligation policy over a four-letter event alphabet, with a direct
//! evaluation of the fulfilled, pending and violated conditions.

use std::collections::BTreeMap;

use cbaco_core::obligation::{DutyState, Event, SimulationState};
use cbaco_core::policy::{extract_policy, DutySpec};
use cbaco_core::workspace::PolicyFile;

use super::policy::scheme;

pub const MAX_LEN: usize = 6;

/// `(subject, action)` of each letter; every event is on `bug`.
pub const ALPHABET: [(&str, &str); 4] = [("p", "open"), ("p", "close"), ("p", "fix"), ("q", "fix")];

/// `p` must fix the bug after every `open` until the next `close`, and
/// once from the start until the first `close`. `q` has no duties.
pub fn policy() -> PolicyFile {
    let s = |x: &str| x.to_string();
    PolicyFile {
        principals: vec![s("p"), s("q")],
        categories: vec![s("dev")],
        actions: vec![s("fix")],
        resources: vec![s("bug")],
        schemes: vec![scheme("g_open", "open", None), scheme("g_close", "close", None)],
        pca: vec![(s("p"), s("dev"))],
        oca: vec![
            (s("fix"), s("bug"), Some(s("g_open")), Some(s("g_close")), s("dev")),
            (s("fix"), s("bug"), None, Some(s("g_close")), s("dev")),
        ],
        ..Default::default()
    }
}

pub fn event(i: usize, letter: usize) -> Event {
    let (subj, act) = ALPHABET[letter];
    Event::new(format!("e{i}"), subj, act, "bug", i as i64)
}

/// What the conditions say about one duty in history `h`. Position 0 is
/// the ⊥ event, event `h[i]` sits at position `i + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdicts {
    pub fulfilled_by: Vec<usize>,
    pub pending: bool,
    pub violated: bool,
}

/// Evaluate the three conditions literally for duty `(p, a, r, e1, e2)`
/// given as history positions (`e2 = None` when it has not happened).
pub fn evaluate(h: &[Event], spec: &DutySpec, e1: usize, e2: Option<usize>) -> Verdicts {
    let ei = |x: usize, y: usize| x < y;
    let ei_end = e2.is_some_and(|k| ei(e1, k));
    let does = |pos: usize| {
        pos >= 1 && {
            let e = &h[pos - 1];
            e.subj == spec.principal && e.act == spec.action && e.obj == spec.resource
        }
    };
    let positions = 0..=h.len();
    let fulfilled_by = positions
        .clone()
        .filter(|&e3| ei(e1, e3) && (e2.is_some_and(|k| ei(e3, k)) || !ei_end) && does(e3))
        .collect();
    let pending = !ei_end && !positions.clone().any(|e3| ei(e1, e3) && does(e3));
    let violated = ei_end && !positions.filter(|&e3| ei(e1, e3) && e2.is_some_and(|k| e3 < k)).any(does);
    Verdicts { fulfilled_by, pending, violated }
}

/// The duties issued over `h` with their start and end positions, derived
/// from the two obligations of [`policy`] without the simulator.
pub fn duties(h: &[Event]) -> Vec<(DutySpec, usize, Option<usize>)> {
    let first_close_after = |from: usize| (from + 1..=h.len()).find(|k| h[k - 1].act == "close");
    let mut starts = vec![0];
    starts.extend((1..=h.len()).filter(|j| h[j - 1].act == "open"));
    starts
        .into_iter()
        .map(|j| {
            let end = first_close_after(j);
            let spec = DutySpec {
                principal: "p".into(),
                action: "fix".into(),
                resource: "bug".into(),
                start: (j > 0).then(|| h[j - 1].id.clone()),
                end: end.map(|k| h[k - 1].id.clone()),
            };
            (spec, j, end)
        })
        .collect()
}

/// Expected state of every duty, keyed by specification.
pub fn expected(h: &[Event]) -> Result<BTreeMap<DutySpec, DutyState>, String> {
    let mut out = BTreeMap::new();
    for (spec, e1, e2) in duties(h) {
        let v = evaluate(h, &spec, e1, e2);
        let holds = usize::from(!v.fulfilled_by.is_empty()) + usize::from(v.pending) + usize::from(v.violated);
        if holds != 1 {
            return Err(format!("{spec:?} satisfies {holds} state conditions: {v:?}"));
        }
        let state = match v.fulfilled_by.first() {
            Some(&pos) => DutyState::Fulfilled { event: h[pos - 1].id.clone(), time: h[pos - 1].time },
            None if v.pending => DutyState::Pending,
            None => DutyState::Violated,
        };
        out.insert(spec, state);
    }
    Ok(out)
}

pub fn actual(sim: &SimulationState) -> BTreeMap<DutySpec, DutyState> {
    sim.duties().iter().map(|d| (d.spec.clone(), sim.duty_state(d.id).unwrap())).collect()
}

/// Outcome of [`explore`].
#[derive(Debug, Default)]
pub struct Walk {
    pub histories: usize,
    pub checked_duties: usize,
    pub max_duties: usize,
    pub failures: Vec<String>,
}

pub fn explore(sim: &SimulationState, h: &mut Vec<Event>, walk: &mut Walk) {
    walk.histories += 1;
    let got = actual(sim);
    match expected(h) {
        Err(e) => walk.failures.push(e),
        Ok(want) if want != got => {
            walk.failures.push(format!("{:?}: expected {want:?}, simulator says {got:?}", letters(h)))
        }
        Ok(want) => {
            walk.checked_duties += want.len();
            walk.max_duties = walk.max_duties.max(want.len());
        }
    }
    match extract_policy(sim.graph()) {
        Ok(rel) if rel.da == got.keys().cloned().collect() => {}
        Ok(rel) => walk.failures.push(format!("{:?}: DA {:?} disagrees with the duty list", letters(h), rel.da)),
        Err(e) => walk.failures.push(format!("{:?}: {e}", letters(h))),
    }
    if h.len() == MAX_LEN {
        return;
    }
    for letter in 0..ALPHABET.len() {
        let e = event(h.len(), letter);
        let mut next = sim.clone();
        next.inject_event(e.clone()).unwrap();
        // fulfilled and violated are final
        for d in sim.duties() {
            let before = sim.duty_state(d.id).unwrap();
            let after = next.duty_state(d.id).unwrap();
            if before != DutyState::Pending && before != after {
                walk.failures.push(format!("{:?}+{letter}: duty {} went {before:?} -> {after:?}", letters(h), d.id));
            }
        }
        h.push(e);
        explore(&next, h, walk);
        h.pop();
    }
}

pub fn letters(h: &[Event]) -> Vec<String> {
    h.iter().map(|e| format!("{}:{}", e.subj, e.act)).collect()
}

pub fn start() -> SimulationState {
    SimulationState::new(policy().build().unwrap()).unwrap()
}
