//! Random hierarchical policy files and a relational oracle computed
//! straight from their entity and relation lists.

use std::collections::{BTreeMap, BTreeSet};

use cbaco_core::obligation::{Event, EventScheme, SimulationState};
use cbaco_core::policy::{extract_policy, validate, DutySpec, PolicyGraph};
use cbaco_core::portgraph::{Term, Value};
use cbaco_core::workspace::PolicyFile;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Triple = (String, String, String);
pub type Opa = (String, String, String, Option<String>, Option<String>);

/// Size bounds for generated policies.
#[derive(Debug, Clone, Copy)]
pub struct Bounds {
    pub max_entities: usize,
    pub max_events: usize,
    pub obligations: bool,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { max_entities: 4, max_events: 5, obligations: true }
    }
}

pub fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Reflexive-transitive closure of `pairs` over `0..n`, by Warshall.
pub fn closure(n: usize, pairs: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut m = vec![vec![false; n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = true;
    }
    for (a, b) in pairs {
        m[*a][*b] = true;
    }
    for k in 0..n {
        let via = m[k].clone();
        for row in m.iter_mut() {
            if row[k] {
                for (x, reach) in row.iter_mut().zip(&via) {
                    *x |= *reach;
                }
            }
        }
    }
    m
}

/// A random order on `0..n` as its Hasse diagram: pairs `(i, j)` with
/// `i < j` and no longer path between them.
pub fn hasse(rng: &mut ChaCha8Rng, n: usize, density: f64) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(density) {
                pairs.push((i, j));
            }
        }
    }
    let full = closure(n, &pairs);
    let mut out = Vec::new();
    for &(i, j) in &pairs {
        let longer = (0..n).any(|k| k != i && k != j && full[i][k] && full[k][j]);
        if !longer {
            out.push((i, j));
        }
    }
    out
}

/// Candidate event schemes: an action, optionally narrowed to a resource.
/// Returned as `(name, act, obj)`.
fn scheme_candidates(resources: &[String]) -> Vec<(String, String, Option<String>)> {
    let mut out = Vec::new();
    for act in ["open", "close"] {
        out.push((format!("g_{act}"), act.to_string(), None));
        for r in resources {
            out.push((format!("g_{act}_{r}"), act.to_string(), Some(r.clone())));
        }
    }
    out
}

pub fn scheme(name: &str, act: &str, obj: Option<&str>) -> EventScheme {
    let mut pattern = BTreeMap::new();
    pattern.insert("act".to_string(), Term::Val(Value::str(act)));
    if let Some(o) = obj {
        pattern.insert("obj".to_string(), Term::Val(Value::str(o)));
    }
    EventScheme::new(name, vec![], pattern).expect("ground scheme")
}

pub fn clean(f: &PolicyFile) -> bool {
    f.build().is_ok_and(|g| validate(&g).is_empty())
}

/// A well-formed policy. Category orders are transitively reduced and every
/// assignment is added only when the policy stays well-formed, so redundant
/// edges and grant/ban conflicts never appear.
pub fn random_policy(rng: &mut ChaCha8Rng, b: Bounds) -> PolicyFile {
    let mut n = || rng.gen_range(1..=b.max_entities);
    let (np, nc, na, nr) = (n(), n(), n(), n());
    let mut f = PolicyFile {
        principals: names("p", np),
        categories: names("c", nc),
        actions: names("a", na),
        resources: names("r", nr),
        ..Default::default()
    };
    let auth = hasse(rng, nc, 0.45);
    let obl = hasse(rng, nc, 0.35);
    let cat = |i: usize| format!("c{i}");
    f.cc_auth = auth.iter().map(|(i, j)| (cat(*i), cat(*j))).collect();
    f.cc_obl = obl.iter().map(|(i, j)| (cat(*i), cat(*j))).collect();

    let mut pcs: Vec<(String, String)> = Vec::new();
    for p in &f.principals {
        for c in &f.categories {
            if rng.gen_bool(0.4) {
                pcs.push((p.clone(), c.clone()));
            }
        }
    }
    pcs.shuffle(rng);
    for pc in pcs {
        f.pca.push(pc);
        if !clean(&f) {
            f.pca.pop();
        }
    }

    let mut perms: Vec<(bool, Triple)> = Vec::new();
    for a in &f.actions {
        for r in &f.resources {
            for c in &f.categories {
                let roll: f64 = rng.gen();
                if roll < 0.12 {
                    perms.push((true, (a.clone(), r.clone(), c.clone())));
                } else if roll < 0.2 {
                    perms.push((false, (a.clone(), r.clone(), c.clone())));
                }
            }
        }
    }
    perms.shuffle(rng);
    for (grant, t) in perms {
        let list = if grant { &mut f.arca } else { &mut f.barca };
        list.push(t);
        if !clean(&f) {
            let list = if grant { &mut f.arca } else { &mut f.barca };
            list.pop();
        }
    }

    if b.obligations {
        add_obligations(rng, &mut f, b.max_events);
    }
    f
}

fn add_obligations(rng: &mut ChaCha8Rng, f: &mut PolicyFile, max_events: usize) {
    let mut cands = scheme_candidates(&f.resources);
    cands.shuffle(rng);
    cands.truncate(rng.gen_range(1..=3));
    cands.sort();
    for (name, act, obj) in &cands {
        f.schemes.push(scheme(name, act, obj.as_deref()));
    }
    // a specific scheme points at the general one with the same action
    for (s, act, obj) in &cands {
        if obj.is_some() {
            if let Some((g, ..)) = cands.iter().find(|(_, a, o)| a == act && o.is_none()) {
                if rng.gen_bool(0.7) {
                    f.gg.push((s.clone(), g.clone()));
                }
            }
        }
    }

    let scheme_names: Vec<String> = cands.iter().map(|c| c.0.clone()).collect();
    let pick = |rng: &mut ChaCha8Rng| -> Option<String> {
        if rng.gen_bool(0.3) {
            None
        } else {
            Some(scheme_names.choose(rng).unwrap().clone())
        }
    };
    let mut seen = BTreeSet::new();
    for _ in 0..rng.gen_range(0..=4) {
        let a = f.actions.choose(rng).unwrap().clone();
        let r = f.resources.choose(rng).unwrap().clone();
        let c = f.categories.choose(rng).unwrap().clone();
        let entry = (a, r, pick(rng), pick(rng), c);
        if seen.insert(entry.clone()) {
            f.oca.push(entry);
            if !clean(f) {
                f.oca.pop();
            }
        }
    }

    let mut acts: Vec<String> = vec!["open".into(), "close".into()];
    acts.extend(f.actions.iter().cloned());
    let len = rng.gen_range(0..=max_events);
    for i in 0..len {
        let subj = f.principals.choose(rng).unwrap().clone();
        let act = acts.choose(rng).unwrap().clone();
        let obj = f.resources.choose(rng).unwrap().clone();
        f.events.push(Event::new(format!("e{i}"), subj, act, obj, 10 * i as i64));
    }
    if len > 1 {
        f.histories.push(f.events.iter().map(|e| e.id.clone()).collect());
    }
}

pub fn seeded_policy(seed: u64, b: Bounds) -> PolicyFile {
    random_policy(&mut ChaCha8Rng::seed_from_u64(seed), b)
}

pub fn build(f: &PolicyFile) -> PolicyGraph {
    f.build().expect("generated policy builds")
}

/// Relations of a policy file computed by boolean closure over its lists,
/// without looking at any graph.
#[derive(Debug, Default)]
pub struct Oracle {
    pub sub_auth: BTreeSet<(String, String)>,
    pub sub_obl: BTreeSet<(String, String)>,
    pub par: BTreeSet<Triple>,
    pub bar: BTreeSet<Triple>,
    pub undet: BTreeSet<Triple>,
    pub opa: BTreeSet<Opa>,
    pub et: BTreeSet<(String, String)>,
    pub ei: BTreeSet<(String, String, Vec<String>)>,
}

fn index(xs: &[String]) -> BTreeMap<&str, usize> {
    xs.iter().enumerate().map(|(i, x)| (x.as_str(), i)).collect()
}

/// Whether event `e` instantiates the ground scheme `s`.
pub fn instantiates(e: &Event, s: &EventScheme) -> bool {
    s.pattern().iter().all(|(k, t)| match (k.as_str(), t) {
        (_, Term::Var { .. }) => true,
        ("subj", Term::Val(v)) => v.as_str() == Some(e.subj.as_str()),
        ("act", Term::Val(v)) => v.as_str() == Some(e.act.as_str()),
        ("obj", Term::Val(v)) => v.as_str() == Some(e.obj.as_str()),
        _ => false,
    })
}

impl Oracle {
    pub fn of(f: &PolicyFile) -> Oracle {
        let ci = index(&f.categories);
        let pairs = |xs: &[(String, String)]| -> Vec<(usize, usize)> {
            xs.iter().map(|(a, b)| (ci[a.as_str()], ci[b.as_str()])).collect()
        };
        let nc = f.categories.len();
        let le = closure(nc, &pairs(&f.cc_auth));
        let le_o = closure(nc, &pairs(&f.cc_obl));
        let mut o = Oracle::default();
        for (i, c) in f.categories.iter().enumerate() {
            for (j, d) in f.categories.iter().enumerate() {
                if le[i][j] {
                    o.sub_auth.insert((c.clone(), d.clone()));
                }
                if le_o[i][j] {
                    o.sub_obl.insert((c.clone(), d.clone()));
                }
            }
        }
        for (p, c) in &f.pca {
            let c = ci[c.as_str()];
            // p ∈ c, c ⊆* c', (a, r, c') ∈ ARCA
            for (a, r, c2) in &f.arca {
                if le[c][ci[c2.as_str()]] {
                    o.par.insert((p.clone(), a.clone(), r.clone()));
                }
            }
            // p ∈ c, c' ⊆* c, (a, r, c') ∈ BARCA
            for (a, r, c2) in &f.barca {
                if le[ci[c2.as_str()]][c] {
                    o.bar.insert((p.clone(), a.clone(), r.clone()));
                }
            }
            for (a, r, g1, g2, c2) in &f.oca {
                if le_o[c][ci[c2.as_str()]] {
                    o.opa.insert((p.clone(), a.clone(), r.clone(), g1.clone(), g2.clone()));
                }
            }
        }
        for p in &f.principals {
            for a in &f.actions {
                for r in &f.resources {
                    let t = (p.clone(), a.clone(), r.clone());
                    if !o.par.contains(&t) && !o.bar.contains(&t) {
                        o.undet.insert(t);
                    }
                }
            }
        }
        for e in &f.events {
            for s in &f.schemes {
                if instantiates(e, s) {
                    o.et.insert((e.id.clone(), s.name().to_string()));
                }
            }
        }
        for h in &f.histories {
            for j in 0..h.len() {
                for k in j + 1..h.len() {
                    o.ei.insert((h[j].clone(), h[k].clone(), h.clone()));
                }
            }
        }
        o
    }

    /// Duties after every event of `history` has happened: each `OPA` entry
    /// issues one duty per instance of its start scheme (or one at the start
    /// for ⊥), closed by the first later instance of its end scheme.
    pub fn duties(&self, f: &PolicyFile, history: &[Event]) -> BTreeSet<DutySpec> {
        let scheme = |n: &str| f.schemes.iter().find(|s| s.name() == n).expect("declared scheme");
        let mut out = BTreeSet::new();
        for (p, a, r, g1, g2) in &self.opa {
            let starts: Vec<Option<usize>> = match g1 {
                None => vec![None],
                Some(g) => (0..history.len()).filter(|j| instantiates(&history[*j], scheme(g))).map(Some).collect(),
            };
            for j in starts {
                let from = j.map_or(0, |j| j + 1);
                let end = g2.as_ref().and_then(|g| (from..history.len()).find(|k| instantiates(&history[*k], scheme(g))));
                out.insert(DutySpec {
                    principal: p.clone(),
                    action: a.clone(),
                    resource: r.clone(),
                    start: j.map(|j| history[j].id.clone()),
                    end: end.map(|k| history[k].id.clone()),
                });
            }
        }
        out
    }
}

/// Checks every relation of `f` against the oracle; returns a description
/// of the first disagreement.
pub fn check_axioms(f: &PolicyFile) -> Result<(), String> {
    let g = build(f);
    let rel = extract_policy(&g).map_err(|e| format!("generated policy rejected: {e}"))?;
    let o = Oracle::of(f);
    let eq = |what: &str, ok: bool| if ok { Ok(()) } else { Err(format!("{what} differs from the oracle")) };
    eq("⊆", rel.sub_auth == o.sub_auth)?;
    eq("⊆_O", rel.sub_obl == o.sub_obl)?;
    eq("PAR", rel.par == o.par)?;
    eq("BAR", rel.bar == o.bar)?;
    eq("UNDET", rel.undet == o.undet)?;
    eq("OPA", rel.opa == o.opa)?;
    eq("ET", rel.et == o.et)?;
    eq("EI", rel.ei == o.ei)?;
    if !rel.par.is_disjoint(&rel.bar) {
        return Err("PAR ∩ BAR is not empty".into());
    }
    let mut all = BTreeSet::new();
    for p in &rel.principals {
        for a in &rel.actions {
            for r in &rel.resources {
                all.insert((p.clone(), a.clone(), r.clone()));
            }
        }
    }
    let parts = rel.par.len() + rel.bar.len() + rel.undet.len();
    let union: BTreeSet<_> = rel.par.iter().chain(&rel.bar).chain(&rel.undet).cloned().collect();
    eq("PAR ⊎ BAR ⊎ UNDET", parts == all.len() && union == all)?;

    let sim = SimulationState::starting_at(g, f.events.len()).map_err(|e| e.to_string())?;
    let after = extract_policy(sim.graph()).map_err(|e| format!("simulated graph rejected: {e}"))?;
    eq("DA", after.da == o.duties(f, &sim.history()))
}
