use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Attribute names that are derived from graph structure and never stored in
/// user records.
pub const STRUCTURAL_ATTRS: [&str; 4] = ["Interface", "Arity", "Attach", "Connect"];

/// Prefix marking an attribute name as an attribute variable.
pub const ATTR_VAR_PREFIX: char = '$';

/// A ground value carried by a record entry.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    /// The distinguished "absent" value, written `⊥`.
    Bot,
    Bool(bool),
    Int(i64),
    Str(String),
    Tuple(Vec<Value>),
}

impl Value {
    pub fn str(s: impl Into<String>) -> Self {
        Value::Str(s.into())
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_tuple(&self) -> Option<&[Value]> {
        match self {
            Value::Tuple(t) => Some(t),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bot => f.write_str("⊥"),
            Value::Bool(true) => f.write_str("⊤"),
            Value::Bool(false) => f.write_str("⊥"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Str(s) => f.write_str(s),
            Value::Tuple(items) => {
                f.write_str("(")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Str(s.to_string())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Str(s)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

/// A record entry: either a ground value or a value variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Term {
    Var { var: String },
    Val(Value),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var { var: name.into() }
    }

    pub fn as_value(&self) -> Option<&Value> {
        match self {
            Term::Val(v) => Some(v),
            Term::Var { .. } => None,
        }
    }
}

impl<T: Into<Value>> From<T> for Term {
    fn from(v: T) -> Self {
        Term::Val(v.into())
    }
}

/// A set of `(attribute, value)` pairs labelling a graph element.
///
/// Structural attributes (`Interface`, `Arity`, `Attach`, `Connect`) are not
/// stored here; [`crate::portgraph::PortGraph::label`] synthesizes them from
/// the graph structure so they can never disagree with it.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Record {
    entries: BTreeMap<String, Term>,
}

impl Record {
    pub fn new(name: impl Into<String>) -> Self {
        let mut r = Record::default();
        r.set("Name", Value::Str(name.into()));
        r
    }

    pub fn with(mut self, attr: impl Into<String>, value: impl Into<Term>) -> Self {
        self.set(attr, value);
        self
    }

    pub fn set(&mut self, attr: impl Into<String>, value: impl Into<Term>) {
        self.entries.insert(attr.into(), value.into());
    }

    pub fn remove(&mut self, attr: &str) -> Option<Term> {
        self.entries.remove(attr)
    }

    pub fn get(&self, attr: &str) -> Option<&Term> {
        self.entries.get(attr)
    }

    /// The ground value of `attr`, if present and not a variable.
    pub fn value(&self, attr: &str) -> Option<&Value> {
        self.entries.get(attr).and_then(Term::as_value)
    }

    pub fn name(&self) -> Option<&str> {
        self.value("Name").and_then(Value::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Term)> {
        self.entries.iter()
    }

    pub fn attributes(&self) -> BTreeSet<&str> {
        self.entries.keys().map(String::as_str).collect()
    }

    pub fn is_ground(&self) -> bool {
        self.entries.values().all(|t| matches!(t, Term::Val(_)))
            && self.attribute_vars().next().is_none()
    }

    pub fn value_vars(&self) -> impl Iterator<Item = &str> {
        self.entries.values().filter_map(|t| match t {
            Term::Var { var } => Some(var.as_str()),
            Term::Val(_) => None,
        })
    }

    pub fn attribute_vars(&self) -> impl Iterator<Item = &str> {
        self.entries
            .keys()
            .filter(|k| k.starts_with(ATTR_VAR_PREFIX))
            .map(String::as_str)
    }

    /// Replace every value variable with its binding. Unbound variables are
    /// left in place.
    pub fn instantiate(&self, bindings: &BTreeMap<String, Value>) -> Record {
        let entries = self
            .entries
            .iter()
            .map(|(k, t)| {
                let t = match t {
                    Term::Var { var } => match bindings.get(var) {
                        Some(v) => Term::Val(v.clone()),
                        None => t.clone(),
                    },
                    Term::Val(_) => t.clone(),
                };
                (k.clone(), t)
            })
            .collect();
        Record { entries }
    }

    /// Label compatibility of a pattern record (`self`) against a ground host
    /// record. Ground pattern values must be equal; variables bind on first
    /// occurrence and must agree afterwards. `bindings` is only extended when
    /// the whole record is compatible.
    pub fn matches(&self, host: &Record, bindings: &mut BTreeMap<String, Value>) -> bool {
        let mut fresh: Vec<(String, Value)> = Vec::new();
        for (attr, term) in &self.entries {
            let Some(hv) = host.value(attr) else {
                return false;
            };
            match term {
                Term::Val(v) => {
                    if v != hv {
                        return false;
                    }
                }
                Term::Var { var } => {
                    let bound = bindings
                        .get(var)
                        .or_else(|| fresh.iter().find(|(n, _)| n == var).map(|(_, v)| v));
                    match bound {
                        Some(b) if b != hv => return false,
                        Some(_) => {}
                        None => fresh.push((var.clone(), hv.clone())),
                    }
                }
            }
        }
        bindings.extend(fresh);
        true
    }
}

impl fmt::Display for Record {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, t)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            match t {
                Term::Val(v) => write!(f, "{k}={v}")?,
                Term::Var { var } => write!(f, "{k}=?{var}")?,
            }
        }
        f.write_str("}")
    }
}

/// The signature a graph's records are drawn from.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub attributes: BTreeSet<String>,
    pub attribute_vars: BTreeSet<String>,
    pub values: BTreeSet<Value>,
    pub value_vars: BTreeSet<String>,
}

impl Signature {
    /// Collect the signature used by a set of records.
    pub fn of<'a>(records: impl IntoIterator<Item = &'a Record>) -> Self {
        let mut sig = Signature::default();
        for r in records {
            sig.absorb(r);
        }
        sig
    }

    pub fn absorb(&mut self, r: &Record) {
        for (k, t) in r.iter() {
            if k.starts_with(ATTR_VAR_PREFIX) {
                self.attribute_vars.insert(k.clone());
            } else {
                self.attributes.insert(k.clone());
            }
            match t {
                Term::Val(v) => {
                    self.values.insert(v.clone());
                }
                Term::Var { var } => {
                    self.value_vars.insert(var.clone());
                }
            }
        }
    }

    /// Attribute names, attribute variables and value variables must be
    /// pairwise disjoint. Returns the offending names.
    pub fn overlaps(&self) -> Vec<String> {
        let mut out = BTreeSet::new();
        for a in &self.attributes {
            if self.attribute_vars.contains(a) || self.value_vars.contains(a) {
                out.insert(a.clone());
            }
        }
        for a in &self.attribute_vars {
            if self.value_vars.contains(a) {
                out.insert(a.clone());
            }
        }
        out.into_iter().collect()
    }

    pub fn is_well_formed(&self) -> bool {
        self.overlaps().is_empty()
    }
}
