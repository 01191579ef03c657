use std::fmt;

use serde::{Deserialize, Serialize};

use crate::portgraph::Value;

/// A strategy: a program over rule applications and position/banned updates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "camelCase")]
pub enum Strategy {
    Id,
    Fail,
    /// `one(R)`: apply `R` once at one admissible match.
    One { rule: String },
    /// `S₁; S₂; …`, never nested and never shorter than two steps.
    Seq { steps: Vec<Strategy> },
    Repeat { body: Box<Strategy> },
    While { cond: Cond, body: Box<Strategy> },
    SetPos { set: SetExpr },
    SetBan { set: SetExpr },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "camelCase")]
pub enum Cond {
    /// Succeeds iff the strategy would succeed; its effect is discarded.
    Strat { strategy: Box<Strategy> },
    Not { cond: Box<Cond> },
    IsEmpty { set: SetExpr },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElemKind {
    Node,
    Edge,
}

/// `attr == literal`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pred {
    pub attr: String,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "camelCase")]
pub enum SetExpr {
    CrtGraph,
    CrtPos,
    CrtBan,
    All { set: Box<SetExpr> },
    /// One element of the set (the first, or a seeded-random one).
    One { set: Box<SetExpr> },
    /// Elements of `src` of the given kind satisfying the predicate.
    Property { src: Box<SetExpr>, kind: ElemKind, pred: Pred },
    /// Nodes adjacent to nodes of `src`: through an edge satisfying the
    /// predicate (`edge`), or satisfying it themselves (`node`).
    Ngb { src: Box<SetExpr>, kind: ElemKind, pred: Pred },
    Union { left: Box<SetExpr>, right: Box<SetExpr> },
    Diff { left: Box<SetExpr>, right: Box<SetExpr> },
}

impl Strategy {
    /// Sequence, flattening nested sequences and dropping the wrapper for a
    /// single step.
    pub fn seq(steps: impl IntoIterator<Item = Strategy>) -> Strategy {
        let mut flat = Vec::new();
        for s in steps {
            match s {
                Strategy::Seq { steps } => flat.extend(steps),
                s => flat.push(s),
            }
        }
        if flat.len() == 1 {
            flat.pop().expect("one step")
        } else {
            Strategy::Seq { steps: flat }
        }
    }

    /// Names of every rule the strategy mentions.
    pub fn rule_names(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_rules(&mut out);
        out
    }

    fn collect_rules<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Strategy::One { rule } => out.push(rule),
            Strategy::Seq { steps } => steps.iter().for_each(|s| s.collect_rules(out)),
            Strategy::Repeat { body } => body.collect_rules(out),
            Strategy::While { cond, body } => {
                cond.collect_rules(out);
                body.collect_rules(out);
            }
            _ => {}
        }
    }
}

impl Cond {
    fn collect_rules<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Cond::Strat { strategy } => strategy.collect_rules(out),
            Cond::Not { cond } => cond.collect_rules(out),
            Cond::IsEmpty { .. } => {}
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Id => f.write_str("id"),
            Strategy::Fail => f.write_str("fail"),
            Strategy::One { rule } => write!(f, "one({rule})"),
            Strategy::Seq { steps } => {
                for (i, s) in steps.iter().enumerate() {
                    if i > 0 {
                        f.write_str("; ")?;
                    }
                    write!(f, "{s}")?;
                }
                Ok(())
            }
            Strategy::Repeat { body } => write!(f, "repeat({body})"),
            Strategy::While { cond, body } => write!(f, "while({cond})do({body})"),
            Strategy::SetPos { set } => write!(f, "setPos({set})"),
            Strategy::SetBan { set } => write!(f, "setBan({set})"),
        }
    }
}

impl fmt::Display for Cond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cond::Strat { strategy } => write!(f, "{strategy}"),
            Cond::Not { cond } => write!(f, "not({cond})"),
            Cond::IsEmpty { set } => write!(f, "isEmpty({set})"),
        }
    }
}

impl fmt::Display for ElemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ElemKind::Node => "node",
            ElemKind::Edge => "edge",
        })
    }
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.value {
            Value::Str(s) => write!(f, "{}==\"{}\"", self.attr, s.replace('\\', "\\\\").replace('"', "\\\"")),
            Value::Int(i) => write!(f, "{}=={i}", self.attr),
            Value::Bool(b) => write!(f, "{}=={b}", self.attr),
            other => write!(f, "{}=={other}", self.attr),
        }
    }
}

impl fmt::Display for SetExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let binary = |e: &SetExpr| matches!(e, SetExpr::Union { .. } | SetExpr::Diff { .. });
        match self {
            SetExpr::CrtGraph => f.write_str("crtGraph"),
            SetExpr::CrtPos => f.write_str("crtPos"),
            SetExpr::CrtBan => f.write_str("crtBan"),
            SetExpr::All { set } => write!(f, "all({set})"),
            SetExpr::One { set } => write!(f, "one({set})"),
            SetExpr::Property { src, kind, pred } => write!(f, "property({src},{kind},{pred})"),
            SetExpr::Ngb { src, kind, pred } => write!(f, "ngb({src},{kind},{pred})"),
            SetExpr::Union { left, right } | SetExpr::Diff { left, right } => {
                let op = if matches!(self, SetExpr::Union { .. }) { "[cup]" } else { "\\" };
                if binary(right) {
                    write!(f, "{left}{op}({right})")
                } else {
                    write!(f, "{left}{op}{right}")
                }
            }
        }
    }
}
