//! Fixtures shared by the CLI and HTTP tests.
#![allow(dead_code)]

use std::path::PathBuf;

use cbaco_core::obligation::{Event, EventScheme};
use cbaco_core::portgraph::{Term, Value};
use cbaco_core::workspace::PolicyFile;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn example() -> Vec<u8> {
    std::fs::read(fixture("example1.cbaco")).unwrap()
}

pub fn example_events() -> Vec<Event> {
    std::fs::read_to_string(fixture("example1_events.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

pub fn aux_script() -> String {
    std::fs::read_to_string(fixture("aux_pc.strat")).unwrap()
}

fn s(x: &str) -> String {
    x.to_string()
}

/// `p ∈ c0 ⊆ c1 ⊆ c2`, with `c2` granted `(a, r)`.
pub fn chain() -> PolicyFile {
    PolicyFile {
        principals: vec![s("p")],
        categories: vec![s("c0"), s("c1"), s("c2")],
        actions: vec![s("a")],
        resources: vec![s("r")],
        pca: vec![(s("p"), s("c0"))],
        cc_auth: vec![(s("c0"), s("c1")), (s("c1"), s("c2"))],
        arca: vec![(s("a"), s("r"), s("c2"))],
        ..Default::default()
    }
}

/// `chain` plus a ban on `c0`: `p` is both granted and banned.
pub fn conflicted() -> PolicyFile {
    let mut f = chain();
    f.barca.push((s("a"), s("r"), s("c0")));
    f
}

/// `q` must `fix` the `bug` between an `open` and the next `close`. Every
/// listed event is already processed.
pub fn fixing(events: &[(&str, &str)]) -> PolicyFile {
    let scheme = |name: &str, act: &str| {
        let pattern = [(s("act"), Term::Val(Value::str(act)))].into();
        EventScheme::new(name, vec![], pattern).unwrap()
    };
    let schemes = vec![scheme("g_open", "open"), scheme("g_close", "close")];
    let events: Vec<Event> =
        events.iter().enumerate().map(|(i, (subj, act))| Event::new(format!("e{i}"), *subj, *act, "bug", i as i64)).collect();
    PolicyFile {
        principals: vec![s("q"), s("z")],
        categories: vec![s("dev")],
        actions: vec![s("fix")],
        resources: vec![s("bug")],
        schemes,
        pca: vec![(s("q"), s("dev"))],
        oca: vec![(s("fix"), s("bug"), Some(s("g_open")), Some(s("g_close")), s("dev"))],
        histories: if events.len() > 1 { vec![events.iter().map(|e| e.id.clone()).collect()] } else { vec![] },
        processed: Some(events.len()),
        events,
        ..Default::default()
    }
}

/// Write `bytes` to a fresh file under the system temp directory.
pub fn temp_file(name: &str, bytes: &[u8]) -> PathBuf {
    use std::sync::atomic::{AtomicUsize, Ordering};
    static COUNTER: AtomicUsize = AtomicUsize::new(0);
    let dir = std::env::temp_dir().join(format!("cbaco-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(format!("{}-{name}", COUNTER.fetch_add(1, Ordering::SeqCst)));
    std::fs::write(&path, bytes).unwrap();
    path
}
