//! One PASS/FAIL line per acceptance criterion.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use cbaco_core::obligation::{DutyState, SimulationState};
use cbaco_core::policy::{extract_policy, validate, DutySpec, Violation};
use cbaco_core::portgraph::{apply_rule, canonical_form, match_rule};
use cbaco_core::strategy::parse_strategy;
use cbaco_core::workspace::{load_policy, PolicyFile};
use common::duties::{explore, start, Walk};
use common::graphs::{agrees_with_brute_force, pair};
use common::hierarchy::{aux_memberships, expected_memberships, hierarchy, node_count, run, Pair, MAX_NODES, SCRIPT};
use common::policy::{check_axioms, seeded_policy, Bounds, Oracle, Triple};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EXAMPLE: &str = include_str!("../../../fixtures/example1.cbaco");

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, why: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(why())
    }
}

fn example_golden() -> Outcome {
    let t0 = Instant::now();
    let g = load_policy(EXAMPLE.as_bytes()).map_err(|e| e.to_string())?;
    let rel = extract_policy(&g).map_err(|e| e.to_string())?;
    let elapsed = t0.elapsed();
    let sizes = [
        ("PCA", rel.pca.len(), 2),
        ("ARCA", rel.arca.len(), 2),
        ("PAR", rel.par.len(), 2),
        ("BARCA", rel.barca.len(), 0),
        ("BAR", rel.bar.len(), 0),
        ("UNDET", rel.undet.len(), 10),
        ("OCA", rel.oca.len(), 2),
        ("OPA", rel.opa.len(), 2),
        ("ET", rel.et.len(), 1),
        ("EI", rel.ei.len(), 1),
    ];
    for (what, got, want) in sizes {
        ensure(got == want, || format!("|{what}| = {got}, expected {want}"))?;
    }
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("all sizes match, {elapsed:?}"))
}

fn duty_lifecycle() -> Outcome {
    let g = load_policy(EXAMPLE.as_bytes()).map_err(|e| e.to_string())?;
    let mut sim = SimulationState::new(g).map_err(|e| e.to_string())?;
    sim.advance().map_err(|e| e.to_string())?;
    let want = DutySpec {
        principal: "C. Tuck".into(),
        action: "Declare".into(),
        resource: "Admin-log".into(),
        start: Some("read-event".into()),
        end: None,
    };
    let da = extract_policy(sim.graph()).map_err(|e| e.to_string())?.da;
    ensure(da == [want.clone()].into(), || format!("DA after event 1 is {da:?}"))?;
    let state = sim.duty_state(0).map_err(|e| e.to_string())?;
    ensure(state == DutyState::Pending, || format!("after event 1 the duty is {state:?}"))?;
    sim.advance().map_err(|e| e.to_string())?;
    let state = sim.duty_state(0).map_err(|e| e.to_string())?;
    let done = DutyState::Fulfilled { event: "declare-event".into(), time: 200 };
    ensure(state == done, || format!("after event 2 the duty is {state:?}"))?;
    Ok("pending after the read, fulfilled at 200".into())
}

fn duty_partition() -> Outcome {
    let mut walk = Walk::default();
    explore(&start(), &mut Vec::new(), &mut walk);
    ensure(walk.failures.is_empty(), || {
        format!("{} of {} histories disagree, first: {}", walk.failures.len(), walk.histories, walk.failures[0])
    })?;
    ensure(walk.max_duties >= 2, || "no history reaches two duties".into())?;
    Ok(format!("{} histories, {} duty states, 100% agreement", walk.histories, walk.checked_duties))
}

fn axiom_suite() -> Outcome {
    const N: u64 = 500;
    let mut failures = Vec::new();
    for seed in 0..N {
        let f = seeded_policy(seed, Bounds::default());
        let sizes = [f.principals.len(), f.categories.len(), f.actions.len(), f.resources.len()];
        if sizes.iter().any(|n| *n > 4) {
            failures.push(format!("seed {seed}: sizes {sizes:?}"));
        } else if let Err(e) = check_axioms(&f) {
            failures.push(format!("seed {seed}: {e}"));
        }
    }
    ensure(failures.is_empty(), || format!("{} of {N} policies fail, first: {}", failures.len(), failures[0]))?;
    Ok(format!("{N} policies"))
}

fn matching_oracle() -> Outcome {
    const N: u64 = 300;
    let mut matched = 0;
    for seed in 0..N {
        let (host, rule) = pair(seed);
        ensure(agrees_with_brute_force(&host, &rule), || format!("seed {seed}: matches differ"))?;
        for f in match_rule(&host, &rule) {
            matched += 1;
            let out = apply_rule(&host, &rule, &f).map_err(|e| format!("seed {seed}: {e}"))?;
            out.check_invariants().map_err(|e| format!("seed {seed}: {e:?}"))?;
        }
    }
    Ok(format!("{N} pairs, {matched} rewrites"))
}

fn strategy_conformance() -> Outcome {
    const N: u64 = 100;
    let ast = parse_strategy(SCRIPT).map_err(|e| e.to_string())?;
    for seed in 0..N {
        let f = hierarchy(seed);
        ensure(node_count(&f) <= MAX_NODES, || format!("seed {seed}: too many nodes"))?;
        let g = f.build().map_err(|e| e.to_string())?;
        let first = run(&g, &ast);
        let pca: BTreeSet<Pair> = f.pca.iter().cloned().collect();
        let got: BTreeSet<Pair> = aux_memberships(&first.graph).into_iter().chain(pca).collect();
        ensure(first.succeeded && got == expected_memberships(&f), || format!("seed {seed}: closure differs"))?;
        let form = canonical_form(&first.graph.graph);
        for _ in 1..10 {
            let again = run(&g, &ast);
            ensure(canonical_form(&again.graph.graph) == form && again.tree.outline() == first.tree.outline(), || {
                format!("seed {seed}: runs differ")
            })?;
        }
    }
    Ok(format!("{N} hierarchies, 10 runs each"))
}

/// A well-formed policy plus a grant above and a ban below one of a
/// principal's categories, for the same permission.
fn conflicting(seed: u64) -> (PolicyFile, Triple) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = seeded_policy(seed, Bounds { obligations: false, ..Bounds::default() });
    if f.pca.is_empty() {
        f.pca.push((f.principals[0].clone(), f.categories[0].clone()));
    }
    let (p, c) = f.pca.choose(&mut rng).unwrap().clone();
    let o = Oracle::of(&f);
    let above: Vec<&String> = f.categories.iter().filter(|d| o.sub_auth.contains(&(c.clone(), (*d).clone()))).collect();
    let below: Vec<&String> = f.categories.iter().filter(|d| o.sub_auth.contains(&((*d).clone(), c.clone()))).collect();
    let a = f.actions.choose(&mut rng).unwrap().clone();
    let r = f.resources.choose(&mut rng).unwrap().clone();
    let (up, down) = ((*above.choose(&mut rng).unwrap()).clone(), (*below.choose(&mut rng).unwrap()).clone());
    if rng.gen_bool(0.5) {
        f.arca.push((a.clone(), r.clone(), up));
        f.barca.push((a.clone(), r.clone(), down));
    } else {
        f.barca.push((a.clone(), r.clone(), down));
        f.arca.push((a.clone(), r.clone(), up));
    }
    (f, (p, a, r))
}

fn well_formedness() -> Outcome {
    const N: u64 = 300;
    for seed in 0..N {
        let (f, t) = conflicting(seed);
        let g = f.build().map_err(|e| format!("seed {seed}: {e}"))?;
        let flagged: BTreeSet<Triple> = validate(&g)
            .into_iter()
            .filter_map(|v| match v {
                Violation::GrantBanConflict { principal, action, resource } => Some((principal, action, resource)),
                _ => None,
            })
            .collect();
        ensure(flagged.contains(&t), || format!("seed {seed}: {t:?} not flagged"))?;
        let o = Oracle::of(&f);
        let both: BTreeSet<Triple> = o.par.intersection(&o.bar).cloned().collect();
        ensure(flagged == both, || format!("seed {seed}: flagged {flagged:?}, conflicts {both:?}"))?;
    }
    let g = load_policy(EXAMPLE.as_bytes()).map_err(|e| e.to_string())?;
    let v = validate(&g);
    ensure(v.is_empty(), || format!("the example has violations {v:?}"))?;
    Ok(format!("{N} conflicting policies flagged, the example is clean"))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("example golden", example_golden),
        ("duty lifecycle", duty_lifecycle),
        ("duty-state partition", duty_partition),
        ("axiom suite", axiom_suite),
        ("matching oracle", matching_oracle),
        ("strategy conformance", strategy_conformance),
        ("well-formedness", well_formedness),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                println!("FAIL {name}: {why}");
                failed.push(name);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed: {failed:?}");
        std::process::exit(1);
    }
}
