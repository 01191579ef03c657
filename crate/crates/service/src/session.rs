use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Arc, PoisonError, RwLock, RwLockReadGuard, RwLockWriteGuard};
use std::time::{SystemTime, UNIX_EPOCH};

use cbaco_core::obligation::{Event, SimulationState, StepReport};
use cbaco_core::policy::{aux_pc_rule, validate};
use cbaco_core::portgraph::LocatedGraph;
use cbaco_core::strategy::{
    eval_in_tree, parse_strategy, DerivationStep, DerivationTree, EvalOptions, RuleSet, StrategyError,
};
use cbaco_core::workspace::load_simulation;
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::ServiceError;

/// The rules strategies may name.
pub fn rules() -> RuleSet {
    [("auxPC".to_string(), aux_pc_rule())].into()
}

/// A policy under simulation plus the derivation tree of the strategies
/// run on it.
///
/// The tree is rooted at the policy graph as the session was created or
/// forked. Strategies explore rewrites of that graph; events advance the
/// simulation and leave the tree alone.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Session {
    pub id: Uuid,
    pub parent: Option<Uuid>,
    /// Seconds since the Unix epoch.
    pub created: u64,
    pub sim: SimulationState,
    pub tree: DerivationTree,
    /// Derivation node later strategy runs start from by default.
    pub cursor: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyRequest {
    pub script: String,
    /// Derivation node to start from; the cursor when absent.
    #[serde(default)]
    pub from: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub budget: Option<usize>,
}

/// What a strategy run added to the derivation tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyDelta {
    pub succeeded: bool,
    pub steps: usize,
    /// The node holding the run's final state, now the cursor.
    pub leaf: usize,
    pub added: Vec<DerivationStep>,
    pub size: usize,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

impl Session {
    pub fn new(sim: SimulationState) -> Session {
        let tree = DerivationTree::new(LocatedGraph::new(sim.graph().port_graph().clone()));
        Session { id: Uuid::new_v4(), parent: None, created: now(), sim, tree, cursor: 0 }
    }

    /// Load a policy file, rejecting graphs that are not well-formed.
    pub fn load(bytes: &[u8]) -> Result<Session, ServiceError> {
        let sim = load_simulation(bytes)?;
        let violations = validate(sim.graph());
        if !violations.is_empty() {
            return Err(ServiceError::NotWellFormed(violations.iter().map(ToString::to_string).collect()));
        }
        Ok(Session::new(sim))
    }

    /// A copy under a fresh id.
    pub fn fork(&self) -> Session {
        Session { id: Uuid::new_v4(), parent: Some(self.id), created: now(), ..self.clone() }
    }

    /// Inject `events` in order. Either all are accepted or the session is
    /// left unchanged.
    pub fn inject(&mut self, events: Vec<Event>) -> Result<Vec<StepReport>, ServiceError> {
        let mut sim = self.sim.clone();
        let reports = events.into_iter().map(|e| sim.inject_event(e)).collect::<Result<Vec<_>, _>>()?;
        self.sim = sim;
        Ok(reports)
    }

    pub fn run_strategy(&mut self, req: &StrategyRequest) -> Result<StrategyDelta, ServiceError> {
        let ast = parse_strategy(&req.script).map_err(StrategyError::from)?;
        let at = req.from.unwrap_or(self.cursor);
        let state = self.tree.get(at).ok_or(ServiceError::UnknownNode(at))?.state.clone();
        let mut opts = EvalOptions { seed: req.seed, ..EvalOptions::default() };
        if let Some(b) = req.budget {
            opts.budget = b;
        }
        let before = self.tree.len();
        let run = eval_in_tree(&mut self.tree, at, state, &ast, &rules(), &opts)?;
        self.cursor = run.leaf;
        Ok(StrategyDelta {
            succeeded: run.succeeded,
            steps: run.steps,
            leaf: run.leaf,
            added: self.tree.steps_from(before),
            size: self.tree.len(),
        })
    }
}

pub type SharedSession = Arc<RwLock<Session>>;

/// Sessions by id. Each session has its own lock, so writes to one session
/// are serialized while different sessions proceed concurrently.
#[derive(Debug, Clone, Default)]
pub struct SessionStore {
    sessions: Arc<RwLock<BTreeMap<Uuid, SharedSession>>>,
}

pub(crate) fn read<T>(l: &RwLock<T>) -> RwLockReadGuard<'_, T> {
    l.read().unwrap_or_else(PoisonError::into_inner)
}

pub(crate) fn write<T>(l: &RwLock<T>) -> RwLockWriteGuard<'_, T> {
    l.write().unwrap_or_else(PoisonError::into_inner)
}

impl SessionStore {
    pub fn insert(&self, s: Session) -> Uuid {
        let id = s.id;
        write(&self.sessions).insert(id, Arc::new(RwLock::new(s)));
        id
    }

    /// The session named by `id`; a malformed id names no session.
    pub fn get(&self, id: &str) -> Result<SharedSession, ServiceError> {
        let unknown = || ServiceError::UnknownSession(id.to_string());
        let uuid = Uuid::parse_str(id).map_err(|_| unknown())?;
        read(&self.sessions).get(&uuid).cloned().ok_or_else(unknown)
    }

    pub fn remove(&self, id: &str) -> Result<(), ServiceError> {
        let unknown = || ServiceError::UnknownSession(id.to_string());
        let uuid = Uuid::parse_str(id).map_err(|_| unknown())?;
        write(&self.sessions).remove(&uuid).map(|_| ()).ok_or_else(unknown)
    }

    pub fn ids(&self) -> Vec<Uuid> {
        read(&self.sessions).keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        read(&self.sessions).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every session as JSON, for persistence across restarts.
    pub fn snapshot(&self) -> Vec<u8> {
        let all: Vec<Session> = read(&self.sessions).values().map(|s| read(s).clone()).collect();
        serde_json::to_vec(&all).expect("sessions serialize")
    }

    pub fn restore(&self, bytes: &[u8]) -> Result<usize, ServiceError> {
        let all: Vec<Session> =
            serde_json::from_slice(bytes).map_err(|e| ServiceError::BadRequest(format!("bad snapshot: {e}")))?;
        let n = all.len();
        for s in all {
            self.insert(s);
        }
        Ok(n)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.snapshot())
    }
}
