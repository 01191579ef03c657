//! The two-doctor policy with a declaration duty, checked end to end.

use std::collections::BTreeSet;

use cbaco_core::obligation::{DutyState, Event, SimulationState};
use cbaco_core::policy::{decide, extract_policy, validate, DutySpec, EntityRef, PolicyGraph, Verdict};
use cbaco_core::portgraph::canonical_form;
use cbaco_core::workspace::{
    compute_visuals, load_policy, load_simulation, query_duties, save_policy, DutyFilter, NodeColor,
};

const POLICY: &str = include_str!("../../../fixtures/example1.cbaco");

fn t3(a: &str, b: &str, c: &str) -> (String, String, String) {
    (a.into(), b.into(), c.into())
}

fn graph() -> PolicyGraph {
    load_policy(POLICY.as_bytes()).expect("fixture loads")
}

#[test]
fn validates_clean() {
    assert_eq!(validate(&graph()), vec![]);
}

#[test]
fn relations_match_the_listing() {
    let rel = extract_policy(&graph()).unwrap();
    let s = |xs: &[&str]| xs.iter().map(|x| x.to_string()).collect::<BTreeSet<_>>();
    assert_eq!(rel.principals, s(&["J. Dorian", "C. Tuck"]));
    assert_eq!(rel.categories, s(&["Dr(J. Lewis)", "Dr(F. Mason)"]));
    assert_eq!(rel.actions, s(&["Read", "Declare"]));
    assert_eq!(rel.resources, s(&["Rec(J. Lewis)", "Rec(F. Mason)", "Admin-log"]));
    // only the reflexive pairs
    assert!(rel.sub_auth.iter().all(|(a, b)| a == b));
    assert!(rel.sub_obl.iter().all(|(a, b)| a == b));
    assert_eq!(
        rel.par,
        [t3("J. Dorian", "Read", "Rec(J. Lewis)"), t3("C. Tuck", "Read", "Rec(F. Mason)")].into()
    );
    assert!(rel.barca.is_empty() && rel.bar.is_empty());
    let undet: BTreeSet<_> = [
        t3("C. Tuck", "Read", "Rec(J. Lewis)"),
        t3("J. Dorian", "Declare", "Rec(J. Lewis)"),
        t3("C. Tuck", "Declare", "Rec(J. Lewis)"),
        t3("J. Dorian", "Read", "Rec(F. Mason)"),
        t3("J. Dorian", "Declare", "Rec(F. Mason)"),
        t3("C. Tuck", "Declare", "Rec(F. Mason)"),
        t3("J. Dorian", "Read", "Admin-log"),
        t3("C. Tuck", "Read", "Admin-log"),
        t3("J. Dorian", "Declare", "Admin-log"),
        t3("C. Tuck", "Declare", "Admin-log"),
    ]
    .into();
    assert_eq!(rel.undet, undet);
    let g1 = |p: &str| Some(format!("gen_read[{p}]"));
    assert_eq!(
        rel.opa,
        [
            ("J. Dorian".into(), "Declare".into(), "Admin-log".into(), g1("J. Dorian, F. Mason"), None),
            ("C. Tuck".into(), "Declare".into(), "Admin-log".into(), g1("C. Tuck, J. Lewis"), None),
        ]
        .into()
    );
    assert_eq!(rel.oca.len(), 2);
    assert_eq!(rel.et, [("read-event".to_string(), "gen_read[C. Tuck, J. Lewis]".to_string())].into());
    let h = vec!["read-event".to_string(), "declare-event".to_string()];
    assert_eq!(rel.histories, [h.clone()].into());
    assert_eq!(rel.ei, [("read-event".to_string(), "declare-event".to_string(), h)].into());
}

#[test]
fn duty_is_issued_by_the_read_and_fulfilled_by_the_declaration() {
    let mut sim = SimulationState::new(graph()).unwrap();
    assert_eq!(sim.processed(), 0);
    assert!(sim.duties().is_empty());
    let step = sim.advance().unwrap();
    assert_eq!(step.issued, vec![0]);
    let want = DutySpec {
        principal: "C. Tuck".into(),
        action: "Declare".into(),
        resource: "Admin-log".into(),
        start: Some("read-event".into()),
        end: None,
    };
    assert_eq!(sim.duty(0).unwrap().spec, want);
    assert_eq!(sim.duty_state(0).unwrap(), DutyState::Pending);
    assert_eq!(extract_policy(sim.graph()).unwrap().da, [want].into());

    let pending = query_duties(&sim, &DutyFilter { state: Some("pending".into()), ..Default::default() });
    assert_eq!(pending.duties.len(), 1);
    assert_eq!(pending.duties[0].spec.principal, "C. Tuck");
    assert_eq!(pending.duties[0].trigger.as_deref(), Some("read-event"));

    sim.advance().unwrap();
    assert_eq!(sim.duty_state(0).unwrap(), DutyState::Fulfilled { event: "declare-event".into(), time: 200 });
    assert!(sim.advance().is_err());
}

#[test]
fn unscheduled_events_can_be_injected() {
    let text = include_str!("../../../fixtures/example1_unscheduled.cbaco");
    let mut sim = load_simulation(text.as_bytes()).unwrap();
    for line in include_str!("../../../fixtures/example1_events.jsonl").lines() {
        let e: Event = serde_json::from_str(line).unwrap();
        sim.inject_event(e).unwrap();
    }
    assert_eq!(sim.duties().len(), 1);
    assert_eq!(sim.duty_state(0).unwrap().tag(), "fulfilled");
}

#[test]
fn decisions() {
    let g = graph();
    let d = decide(&g, "J. Dorian", "Read", "Rec(J. Lewis)").unwrap();
    assert_eq!(d.verdict, Verdict::Grant);
    assert_eq!(d.path, vec!["J. Dorian", "Dr(J. Lewis)", "(Read, Rec(J. Lewis))"]);
    let d = decide(&g, "C. Tuck", "Read", "Rec(J. Lewis)").unwrap();
    assert_eq!(d.verdict, Verdict::Undetermined);
    assert!(decide(&g, "Nobody", "Read", "Rec(J. Lewis)").is_err());
}

#[test]
fn colours() {
    let g = graph();
    let vis = compute_visuals(&g).unwrap();
    let color = |ent: EntityRef| vis.nodes[&g.find(&ent).unwrap()].color;
    assert_eq!(color(EntityRef::Resource("Admin-log".into())), NodeColor::Blue);
    assert_eq!(color(EntityRef::Action("Read".into())), NodeColor::Green);
    assert_eq!(color(EntityRef::Event("read-event".into())), NodeColor::LightBlue);
    assert_eq!(color(EntityRef::Event("declare-event".into())), NodeColor::Blue);
}

#[test]
fn save_and_load_round_trip() {
    let g = graph();
    let again = load_policy(&save_policy(&g)).unwrap();
    assert_eq!(canonical_form(again.port_graph()), canonical_form(g.port_graph()));
}
