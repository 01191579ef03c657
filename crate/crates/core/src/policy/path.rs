use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::entity::{Auth, EdgeKind, NodeType};
use super::typed::{TypedEdge, TypedView};
use super::PolicyError;
use crate::portgraph::{EdgeId, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Dir {
    /// `→`: the node stepped onto is in the edge's target.
    Fwd,
    /// `←`: the node stepped from is in the edge's target.
    Back,
}

/// Which order a `CC` step must belong to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CcSub {
    Any,
    /// `auth = ⊤`, the authorization order ⊆.
    Pr,
    /// `obl = ⊤`, the obligation order ⊆_O.
    O,
}

/// One letter of a path type word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Letter {
    /// A step from a node of the first type to a node of the second, over
    /// the edge type joining them, with no further constraint.
    Step(NodeType, NodeType),
    Cc { dir: Dir, sub: CcSub },
    CPr(Auth),
    Gg(Dir),
    Ee(Dir),
}

impl Letter {
    pub const PC: Letter = Letter::Step(NodeType::P, NodeType::C);
    pub const EG: Letter = Letter::Step(NodeType::E, NodeType::G);
    pub const CO: Letter = Letter::Step(NodeType::C, NodeType::O);

    /// Whether the step `from --e--> to` reads as this letter.
    pub fn admits(&self, v: &TypedView, from: NodeId, e: &TypedEdge, to: NodeId) -> bool {
        let (Some(tf), Some(tt)) = (v.ty(from), v.ty(to)) else { return false };
        let dir_ok = |d: Dir| match d {
            Dir::Fwd => e.target.contains(&to),
            Dir::Back => e.target.contains(&from),
        };
        match *self {
            Letter::Step(a, b) => tf == a && tt == b,
            Letter::Cc { dir, sub } => match e.kind {
                EdgeKind::CC { auth, obl } => {
                    dir_ok(dir)
                        && match sub {
                            CcSub::Any => true,
                            CcSub::Pr => auth,
                            CcSub::O => obl,
                        }
                }
                _ => false,
            },
            Letter::CPr(x) => tf == NodeType::C && e.kind == EdgeKind::CPr(x),
            Letter::Gg(d) => e.kind == EdgeKind::GG && dir_ok(d),
            Letter::Ee(d) => e.kind == EdgeKind::EE && dir_ok(d),
        }
    }

    /// Every letter the step `from --e--> to` reads as, without subscripts.
    fn readings(v: &TypedView, from: NodeId, e: &TypedEdge, to: NodeId) -> Vec<Letter> {
        let (tf, tt) = (v.ty(from).expect("typed"), v.ty(to).expect("typed"));
        let dirs: Vec<Dir> = [Dir::Fwd, Dir::Back]
            .into_iter()
            .filter(|d| match d {
                Dir::Fwd => e.target.contains(&to),
                Dir::Back => e.target.contains(&from),
            })
            .collect();
        match e.kind {
            EdgeKind::CC { .. } if !dirs.is_empty() => {
                dirs.into_iter().map(|dir| Letter::Cc { dir, sub: CcSub::Any }).collect()
            }
            EdgeKind::GG if !dirs.is_empty() => dirs.into_iter().map(Letter::Gg).collect(),
            EdgeKind::EE if !dirs.is_empty() => dirs.into_iter().map(Letter::Ee).collect(),
            EdgeKind::CPr(a) if tf == NodeType::C => vec![Letter::CPr(a)],
            _ => vec![Letter::Step(tf, tt)],
        }
    }

    /// ASCII spelling, accepted by the parser alongside the Unicode one.
    pub fn ascii(&self) -> String {
        let arrow = |d: Dir| if d == Dir::Fwd { "->" } else { "<-" };
        match *self {
            Letter::Step(a, b) => format!("{}{}", a.code(), b.code()),
            Letter::Cc { dir, sub } => format!("{}CC{}", arrow(dir), sub_suffix(sub)),
            Letter::CPr(a) => format!("CPr^{}", a.code()),
            Letter::Gg(d) => format!("{}GG", arrow(d)),
            Letter::Ee(d) => format!("{}EE", arrow(d)),
        }
    }
}

fn sub_suffix(s: CcSub) -> &'static str {
    match s {
        CcSub::Any => "",
        CcSub::Pr => "_Pr",
        CcSub::O => "_O",
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arrow = |d: Dir| if d == Dir::Fwd { "→" } else { "←" };
        match *self {
            Letter::Step(a, b) => write!(f, "{}{}", a.code(), b.code()),
            Letter::Cc { dir, sub } => write!(f, "{}CC{}", arrow(dir), sub_suffix(sub)),
            Letter::CPr(Auth::A) => f.write_str("CPrᴬ"),
            Letter::CPr(Auth::B) => f.write_str("CPrᴮ"),
            Letter::Gg(d) => write!(f, "{}GG", arrow(d)),
            Letter::Ee(d) => write!(f, "{}EE", arrow(d)),
        }
    }
}

impl FromStr for Letter {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || PolicyError::BadPattern(format!("unknown letter `{s}`"));
        let (dir, rest) = if let Some(r) = s.strip_prefix('→').or_else(|| s.strip_prefix("->")) {
            (Some(Dir::Fwd), r)
        } else if let Some(r) = s.strip_prefix('←').or_else(|| s.strip_prefix("<-")) {
            (Some(Dir::Back), r)
        } else {
            (None, s)
        };
        if let Some(dir) = dir {
            return match rest {
                "CC" => Ok(Letter::Cc { dir, sub: CcSub::Any }),
                "CC_Pr" => Ok(Letter::Cc { dir, sub: CcSub::Pr }),
                "CC_O" => Ok(Letter::Cc { dir, sub: CcSub::O }),
                "GG" => Ok(Letter::Gg(dir)),
                "EE" => Ok(Letter::Ee(dir)),
                _ => Err(bad()),
            };
        }
        match s {
            "CPrᴬ" | "CPr^A" | "CPr_A" => return Ok(Letter::CPr(Auth::A)),
            "CPrᴮ" | "CPr^B" | "CPr_B" => return Ok(Letter::CPr(Auth::B)),
            _ => {}
        }
        for i in 1..s.len() {
            if !s.is_char_boundary(i) {
                continue;
            }
            if let (Some(a), Some(b)) = (NodeType::parse(&s[..i]), NodeType::parse(&s[i..])) {
                if EdgeKind::code_for(a, b).is_some() {
                    return Ok(Letter::Step(a, b));
                }
            }
        }
        Err(bad())
    }
}

/// A regular expression over letters, e.g. `PC, (→CC_Pr)*, CPrᴬ`.
///
/// `,` concatenates, `|` alternates, `*` is the Kleene star; parentheses
/// group. ASCII arrows (`->`, `<-`) and `CPr^A` are accepted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Pattern {
    Letter(Letter),
    Seq(Vec<Pattern>),
    Alt(Vec<Pattern>),
    Star(Box<Pattern>),
}

impl Pattern {
    pub fn parse(s: &str) -> Result<Pattern, PolicyError> {
        let toks = tokenize(s)?;
        let mut pos = 0;
        let p = parse_alt(&toks, &mut pos)?;
        if pos != toks.len() {
            return Err(PolicyError::BadPattern(format!("unexpected `{}`", toks[pos])));
        }
        Ok(p)
    }

    pub fn seq(items: impl IntoIterator<Item = Pattern>) -> Pattern {
        Pattern::Seq(items.into_iter().collect())
    }

    pub fn star(p: Pattern) -> Pattern {
        Pattern::Star(Box::new(p))
    }

    pub fn letter(l: Letter) -> Pattern {
        Pattern::Letter(l)
    }

    fn compile(&self) -> Nfa {
        let mut nfa = Nfa { trans: Vec::new(), start: 0, accept: 0 };
        let (s, e) = nfa.build(self);
        nfa.start = s;
        nfa.accept = e;
        nfa
    }

    /// Whether a word of letter alternatives (as returned by [`path_type`])
    /// has a reading in the language.
    pub fn accepts_word(&self, word: &[Vec<Letter>]) -> bool {
        let nfa = self.compile();
        let mut cur = nfa.closure([nfa.start]);
        for step in word {
            let next: BTreeSet<usize> = cur
                .iter()
                .flat_map(|s| nfa.trans[*s].iter())
                .filter(|(l, _)| l.is_some_and(|l| step.iter().any(|x| letter_covers(&l, x))))
                .map(|(_, t)| *t)
                .collect();
            cur = nfa.closure(next);
        }
        cur.contains(&nfa.accept)
    }
}

/// Whether pattern letter `p` covers the unsubscripted reading `x`.
fn letter_covers(p: &Letter, x: &Letter) -> bool {
    match (p, x) {
        (Letter::Cc { dir, .. }, Letter::Cc { dir: d2, .. }) => dir == d2,
        _ => p == x,
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Letter(l) => write!(f, "{l}"),
            Pattern::Seq(items) => {
                for (i, p) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    match p {
                        Pattern::Alt(_) => write!(f, "({p})")?,
                        _ => write!(f, "{p}")?,
                    }
                }
                Ok(())
            }
            Pattern::Alt(items) => {
                for (i, p) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    write!(f, "{p}")?;
                }
                Ok(())
            }
            Pattern::Star(p) => write!(f, "({p})*"),
        }
    }
}

impl FromStr for Pattern {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Pattern::parse(s)
    }
}

fn tokenize(s: &str) -> Result<Vec<String>, PolicyError> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let flush = |cur: &mut String, out: &mut Vec<String>| {
        if !cur.is_empty() {
            out.push(std::mem::take(cur));
        }
    };
    for c in s.chars() {
        match c {
            ',' | '|' | '(' | ')' | '*' => {
                flush(&mut cur, &mut out);
                out.push(c.to_string());
            }
            // `<-` and `->` are part of a letter, so `-`, `<` and `>` are
            // plain letter characters here
            c if c.is_whitespace() => flush(&mut cur, &mut out),
            _ => cur.push(c),
        }
    }
    flush(&mut cur, &mut out);
    if out.is_empty() {
        return Err(PolicyError::BadPattern("empty pattern".into()));
    }
    Ok(out)
}

fn parse_alt(t: &[String], pos: &mut usize) -> Result<Pattern, PolicyError> {
    let mut alts = vec![parse_seq(t, pos)?];
    while t.get(*pos).map(String::as_str) == Some("|") {
        *pos += 1;
        alts.push(parse_seq(t, pos)?);
    }
    Ok(if alts.len() == 1 { alts.pop().expect("one") } else { Pattern::Alt(alts) })
}

fn parse_seq(t: &[String], pos: &mut usize) -> Result<Pattern, PolicyError> {
    let mut items = vec![parse_item(t, pos)?];
    while t.get(*pos).map(String::as_str) == Some(",") {
        *pos += 1;
        items.push(parse_item(t, pos)?);
    }
    Ok(if items.len() == 1 { items.pop().expect("one") } else { Pattern::Seq(items) })
}

fn parse_item(t: &[String], pos: &mut usize) -> Result<Pattern, PolicyError> {
    let tok = t.get(*pos).ok_or_else(|| PolicyError::BadPattern("unexpected end".into()))?;
    let mut p = if tok == "(" {
        *pos += 1;
        let inner = parse_alt(t, pos)?;
        if t.get(*pos).map(String::as_str) != Some(")") {
            return Err(PolicyError::BadPattern("missing `)`".into()));
        }
        *pos += 1;
        inner
    } else if [",", "|", ")", "*"].contains(&tok.as_str()) {
        return Err(PolicyError::BadPattern(format!("unexpected `{tok}`")));
    } else {
        *pos += 1;
        Pattern::Letter(tok.parse()?)
    };
    while t.get(*pos).map(String::as_str) == Some("*") {
        *pos += 1;
        p = Pattern::Star(Box::new(p));
    }
    Ok(p)
}

/// Thompson automaton; `None` labels are ε-moves.
struct Nfa {
    trans: Vec<Vec<(Option<Letter>, usize)>>,
    start: usize,
    accept: usize,
}

impl Nfa {
    fn state(&mut self) -> usize {
        self.trans.push(Vec::new());
        self.trans.len() - 1
    }

    fn build(&mut self, p: &Pattern) -> (usize, usize) {
        match p {
            Pattern::Letter(l) => {
                let (s, e) = (self.state(), self.state());
                self.trans[s].push((Some(*l), e));
                (s, e)
            }
            Pattern::Seq(items) => {
                let s = self.state();
                let mut cur = s;
                for it in items {
                    let (a, b) = self.build(it);
                    self.trans[cur].push((None, a));
                    cur = b;
                }
                (s, cur)
            }
            Pattern::Alt(items) => {
                let (s, e) = (self.state(), self.state());
                for it in items {
                    let (a, b) = self.build(it);
                    self.trans[s].push((None, a));
                    self.trans[b].push((None, e));
                }
                (s, e)
            }
            Pattern::Star(inner) => {
                let (s, e) = (self.state(), self.state());
                let (a, b) = self.build(inner);
                self.trans[s].push((None, a));
                self.trans[s].push((None, e));
                self.trans[b].push((None, a));
                self.trans[b].push((None, e));
                (s, e)
            }
        }
    }

    fn closure(&self, seed: impl IntoIterator<Item = usize>) -> BTreeSet<usize> {
        let mut out: BTreeSet<usize> = BTreeSet::new();
        let mut stack: Vec<usize> = seed.into_iter().collect();
        while let Some(s) = stack.pop() {
            if out.insert(s) {
                for (l, t) in &self.trans[s] {
                    if l.is_none() {
                        stack.push(*t);
                    }
                }
            }
        }
        out
    }

    fn step(&self, v: &TypedView, states: &BTreeSet<usize>, from: NodeId, e: &TypedEdge, to: NodeId) -> BTreeSet<usize> {
        let next: Vec<usize> = states
            .iter()
            .flat_map(|s| self.trans[*s].iter())
            .filter(|(l, _)| l.is_some_and(|l| l.admits(v, from, e, to)))
            .map(|(_, t)| *t)
            .collect();
        self.closure(next)
    }
}

/// A path `n₀, e₁, n₁, …, e_d, n_d`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Path {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<EdgeId>,
}

impl Path {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn end(&self) -> NodeId {
        *self.nodes.last().expect("paths have a start node")
    }
}

/// The type word of the path through `nodes`: for every step, the letters
/// it reads as (several when parallel edges join the pair or a `CC` edge has
/// both ends in its target).
pub fn path_type(v: &TypedView, nodes: &[NodeId]) -> Result<Vec<Vec<Letter>>, PolicyError> {
    let mut seen = BTreeSet::new();
    for n in nodes {
        if !v.nodes.contains_key(n) {
            return Err(PolicyError::NotAPath(format!("{n} is not a policy node")));
        }
        if !seen.insert(*n) {
            return Err(PolicyError::NotAPath(format!("{n} repeats")));
        }
    }
    let mut word = Vec::new();
    for w in nodes.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mut letters = BTreeSet::new();
        for e in v.incident(a).filter(|e| e.other(a) == b) {
            letters.extend(Letter::readings(v, a, e, b));
        }
        if letters.is_empty() {
            return Err(PolicyError::NotAPath(format!("{a} and {b} are not adjacent")));
        }
        word.push(letters.into_iter().collect());
    }
    Ok(word)
}

/// Render a type word, alternatives joined by `|`.
pub fn format_word(word: &[Vec<Letter>]) -> String {
    word.iter()
        .map(|alts| alts.iter().map(Letter::to_string).collect::<Vec<_>>().join("|"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Every constrained (or, with `inverse`, inverse constrained) path from
/// `from` whose type word is in `pattern`. Paths are simple, so the search
/// terminates; the zero-length path is included when the pattern accepts the
/// empty word.
pub fn constrained_paths(v: &TypedView, from: NodeId, pattern: &Pattern, inverse: bool) -> Vec<Path> {
    let mut out = Vec::new();
    if !v.nodes.contains_key(&from) {
        return out;
    }
    let nfa = pattern.compile();
    let start = nfa.closure([nfa.start]);
    let mut path = Path { nodes: vec![from], edges: Vec::new() };
    let mut on_path: BTreeSet<NodeId> = [from].into();
    dfs(v, &nfa, &start, &mut path, &mut on_path, inverse, &mut out);
    out
}

fn dfs(
    v: &TypedView,
    nfa: &Nfa,
    states: &BTreeSet<usize>,
    path: &mut Path,
    on_path: &mut BTreeSet<NodeId>,
    inverse: bool,
    out: &mut Vec<Path>,
) {
    if states.contains(&nfa.accept) {
        out.push(path.clone());
    }
    let here = path.end();
    for e in v.incident(here) {
        let next = e.other(here);
        if on_path.contains(&next) || !e.walkable(here, next, inverse) {
            continue;
        }
        let ns = nfa.step(v, states, here, e, next);
        if ns.is_empty() {
            continue;
        }
        path.nodes.push(next);
        path.edges.push(e.id);
        on_path.insert(next);
        dfs(v, nfa, &ns, path, on_path, inverse, out);
        on_path.remove(&next);
        path.nodes.pop();
        path.edges.pop();
    }
}

/// A shortest constrained path from `from` matching `pattern` and ending in
/// a node accepted by `goal`. Breadth-first over (node, automaton state)
/// pairs; the walk found is checked for simplicity and the exhaustive search
/// is used if it is not.
pub fn shortest_constrained_path(
    v: &TypedView,
    from: NodeId,
    pattern: &Pattern,
    inverse: bool,
    goal: impl Fn(NodeId) -> bool,
) -> Option<Path> {
    if !v.nodes.contains_key(&from) {
        return None;
    }
    let nfa = pattern.compile();
    let start = nfa.closure([nfa.start]);
    // product state -> the state and edge it was reached from
    type State = (NodeId, usize);
    let mut parent: BTreeMap<State, Option<(State, EdgeId)>> = BTreeMap::new();
    let mut queue = VecDeque::new();
    for s in start {
        parent.insert((from, s), None);
        queue.push_back((from, s));
    }
    let mut found = None;
    while let Some((n, s)) = queue.pop_front() {
        if s == nfa.accept && goal(n) {
            found = Some((n, s));
            break;
        }
        for e in v.incident(n) {
            let m = e.other(n);
            if !e.walkable(n, m, inverse) {
                continue;
            }
            for t in nfa.step(v, &[s].into(), n, e, m) {
                if let std::collections::btree_map::Entry::Vacant(slot) = parent.entry((m, t)) {
                    slot.insert(Some(((n, s), e.id)));
                    queue.push_back((m, t));
                }
            }
        }
    }
    let mut cur = found?;
    let mut nodes = vec![cur.0];
    let mut edges = Vec::new();
    while let Some(Some((prev, e))) = parent.get(&cur) {
        nodes.push(prev.0);
        edges.push(*e);
        cur = *prev;
    }
    nodes.reverse();
    edges.reverse();
    let simple = nodes.iter().collect::<BTreeSet<_>>().len() == nodes.len();
    if simple {
        return Some(Path { nodes, edges });
    }
    constrained_paths(v, from, pattern, inverse)
        .into_iter()
        .filter(|p| goal(p.end()))
        .min_by_key(|p| (p.len(), p.clone()))
}

/// End nodes of walks from `from` matching `pattern`. For patterns whose
/// repeated part is a single starred letter between letters of other node
/// types, every such walk contains a simple path with the same ends and a
/// matching type, so this equals the set of constrained path ends.
pub(crate) fn reach(v: &TypedView, from: NodeId, pattern: &Pattern, inverse: bool) -> BTreeSet<NodeId> {
    let mut out = BTreeSet::new();
    if !v.nodes.contains_key(&from) {
        return out;
    }
    let nfa = pattern.compile();
    let mut seen: BTreeSet<(NodeId, usize)> = BTreeSet::new();
    let mut stack: Vec<(NodeId, usize)> = nfa.closure([nfa.start]).into_iter().map(|s| (from, s)).collect();
    while let Some((n, s)) = stack.pop() {
        if !seen.insert((n, s)) {
            continue;
        }
        if s == nfa.accept {
            out.insert(n);
        }
        for e in v.incident(n) {
            let m = e.other(n);
            if !e.walkable(n, m, inverse) {
                continue;
            }
            for t in nfa.step(v, &[s].into(), n, e, m) {
                if !seen.contains(&(m, t)) {
                    stack.push((m, t));
                }
            }
        }
    }
    out
}
