use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ast::{Cond, ElemKind, Pred, SetExpr, Strategy};
use super::tree::DerivationTree;
use super::StrategyError;
use crate::portgraph::{apply_located_rule, located_matches, Elem, LocatedGraph, LocatedRule, Record, Subgraph};

pub const DEFAULT_BUDGET: usize = 10_000;

/// Rules available to a strategy, by name.
pub type RuleSet = BTreeMap<String, LocatedRule>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalOptions {
    /// Maximum number of rule applications plus loop iterations.
    pub budget: usize,
    /// Pick matches and set elements at random from this seed instead of
    /// taking the first one.
    pub seed: Option<u64>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { budget: DEFAULT_BUDGET, seed: None }
    }
}

/// Outcome of running a strategy inside an existing derivation tree.
#[derive(Debug, Clone)]
pub struct Run {
    pub graph: LocatedGraph,
    pub succeeded: bool,
    /// Tree node holding the last committed rule application, or the node
    /// the run started from.
    pub leaf: usize,
    /// Ids of the tree nodes the run added.
    pub added: Vec<usize>,
    pub steps: usize,
}

/// Outcome of [`eval_strategy`].
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub graph: LocatedGraph,
    pub tree: DerivationTree,
    pub succeeded: bool,
    pub steps: usize,
}

/// Run `ast` from `start` in a fresh derivation tree.
///
/// A strategy that fails leaves the graph as it was before the failing
/// construct; failure is reported in `succeeded`, not as an error.
pub fn eval_strategy(
    start: LocatedGraph,
    ast: &Strategy,
    rules: &RuleSet,
    opts: &EvalOptions,
) -> Result<Evaluation, StrategyError> {
    let mut tree = DerivationTree::new(start.clone());
    let run = eval_in_tree(&mut tree, 0, start, ast, rules, opts)?;
    Ok(Evaluation { graph: run.graph, tree, succeeded: run.succeeded, steps: run.steps })
}

/// Run `ast` from `state`, attaching new derivation nodes below `at`.
/// On error the tree is left as it was.
pub fn eval_in_tree(
    tree: &mut DerivationTree,
    at: usize,
    state: LocatedGraph,
    ast: &Strategy,
    rules: &RuleSet,
    opts: &EvalOptions,
) -> Result<Run, StrategyError> {
    if tree.get(at).is_none() {
        return Err(StrategyError::UnknownNode(at));
    }
    if let Some(r) = ast.rule_names().into_iter().find(|r| !rules.contains_key(*r)) {
        return Err(StrategyError::UnknownRule(r.to_owned()));
    }
    let start_len = tree.len();
    let mut it = Interp {
        rules,
        budget: opts.budget,
        steps: 0,
        rng: opts.seed.map(ChaCha8Rng::seed_from_u64),
        tree,
        cursor: at,
        state,
    };
    match it.run(ast) {
        Ok(succeeded) => Ok(Run {
            added: (start_len..it.tree.len()).collect(),
            graph: it.state,
            succeeded,
            leaf: it.cursor,
            steps: it.steps,
        }),
        Err(e) => {
            it.tree.truncate(start_len);
            Err(e)
        }
    }
}

struct Snapshot {
    state: LocatedGraph,
    cursor: usize,
    tree_len: usize,
    rng: Option<ChaCha8Rng>,
}

struct Interp<'a> {
    rules: &'a RuleSet,
    budget: usize,
    steps: usize,
    rng: Option<ChaCha8Rng>,
    tree: &'a mut DerivationTree,
    cursor: usize,
    state: LocatedGraph,
}

impl Interp<'_> {
    fn tick(&mut self) -> Result<(), StrategyError> {
        self.steps += 1;
        if self.steps > self.budget {
            Err(StrategyError::BudgetExceeded(self.budget))
        } else {
            Ok(())
        }
    }

    fn snapshot(&self) -> Snapshot {
        Snapshot { state: self.state.clone(), cursor: self.cursor, tree_len: self.tree.len(), rng: self.rng.clone() }
    }

    fn restore(&mut self, s: Snapshot) {
        self.state = s.state;
        self.cursor = s.cursor;
        self.tree.truncate(s.tree_len);
        self.rng = s.rng;
    }

    fn pick(&mut self, n: usize) -> usize {
        match &mut self.rng {
            Some(r) => r.gen_range(0..n),
            None => 0,
        }
    }

    fn run(&mut self, s: &Strategy) -> Result<bool, StrategyError> {
        match s {
            Strategy::Id => Ok(true),
            Strategy::Fail => Ok(false),
            Strategy::One { rule } => {
                let lrule = &self.rules[rule];
                let ms = located_matches(&self.state, lrule);
                if ms.is_empty() {
                    return Ok(false);
                }
                self.tick()?;
                let f = &ms[self.pick(ms.len())];
                self.state = apply_located_rule(&self.state, lrule, f)?;
                self.cursor = self.tree.push(self.cursor, rule, f.digest(), self.state.clone());
                Ok(true)
            }
            Strategy::Seq { steps } => {
                let snap = self.snapshot();
                for step in steps {
                    if !self.run(step)? {
                        self.restore(snap);
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Strategy::Repeat { body } => {
                loop {
                    self.tick()?;
                    let snap = self.snapshot();
                    if !self.run(body)? {
                        self.restore(snap);
                        return Ok(true);
                    }
                }
            }
            Strategy::While { cond, body } => {
                let snap = self.snapshot();
                loop {
                    self.tick()?;
                    if !self.cond(cond)? {
                        return Ok(true);
                    }
                    if !self.run(body)? {
                        self.restore(snap);
                        return Ok(false);
                    }
                }
            }
            Strategy::SetPos { set } => {
                self.state.position = self.set(set);
                Ok(true)
            }
            Strategy::SetBan { set } => {
                self.state.banned = self.set(set);
                Ok(true)
            }
        }
    }

    /// Conditions never change the state: a strategy used as a condition is
    /// run on a scratch copy and its result discarded.
    fn cond(&mut self, c: &Cond) -> Result<bool, StrategyError> {
        match c {
            Cond::Strat { strategy } => {
                let snap = self.snapshot();
                let ok = self.run(strategy)?;
                self.restore(snap);
                Ok(ok)
            }
            Cond::Not { cond } => Ok(!self.cond(cond)?),
            Cond::IsEmpty { set } => Ok(self.set(set).is_empty()),
        }
    }

    fn set(&mut self, e: &SetExpr) -> Subgraph {
        let g = &self.state.graph;
        match e {
            SetExpr::CrtGraph => Subgraph::whole(g),
            SetExpr::CrtPos => self.state.position.restrict_to(g),
            SetExpr::CrtBan => self.state.banned.restrict_to(g),
            SetExpr::All { set } => self.set(set),
            SetExpr::One { set } => {
                let s = self.set(set);
                if s.is_empty() {
                    return s;
                }
                let i = self.pick(s.len());
                let elem = s.elems().nth(i).expect("index below len");
                Subgraph::from_elems([elem])
            }
            SetExpr::Property { src, kind, pred } => {
                let s = self.set(src);
                let g = &self.state.graph;
                match kind {
                    ElemKind::Node => Subgraph::from_nodes(
                        s.nodes.iter().copied().filter(|n| g.node(*n).is_some_and(|x| holds(pred, &x.record))),
                    ),
                    ElemKind::Edge => Subgraph::from_elems(
                        s.edges
                            .iter()
                            .copied()
                            .filter(|e| g.edge(*e).is_some_and(|x| holds(pred, &x.record)))
                            .map(Elem::Edge),
                    ),
                }
            }
            SetExpr::Ngb { src, kind, pred } => {
                let s = self.set(src);
                let g = &self.state.graph;
                let mut out = BTreeSet::new();
                for n in &s.nodes {
                    for e in g.node_edges(*n) {
                        let Some([a, b]) = g.edge_nodes(e) else { continue };
                        let other = if a == *n { b } else { a };
                        let ok = match kind {
                            ElemKind::Edge => holds(pred, &g.edge(e).expect("edge exists").record),
                            ElemKind::Node => holds(pred, &g.node(other).expect("node exists").record),
                        };
                        if ok {
                            out.insert(other);
                        }
                    }
                }
                Subgraph::from_nodes(out)
            }
            SetExpr::Union { left, right } => {
                let l = self.set(left);
                l.union(&self.set(right))
            }
            SetExpr::Diff { left, right } => {
                let l = self.set(left);
                l.difference(&self.set(right))
            }
        }
    }
}

fn holds(pred: &Pred, r: &Record) -> bool {
    r.value(&pred.attr) == Some(&pred.value)
}
