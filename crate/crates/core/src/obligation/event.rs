use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ObligationError;
use crate::portgraph::{Record, Term, Value};

/// Prefix marking a scheme pattern value as a variable, e.g. `"?X"`.
pub const VAR_PREFIX: char = '?';

/// A ground event: something that happened at a given (logical) time.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Event {
    pub id: String,
    pub subj: String,
    pub act: String,
    pub obj: String,
    pub time: i64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, Value>,
}

impl Event {
    pub fn new(
        id: impl Into<String>,
        subj: impl Into<String>,
        act: impl Into<String>,
        obj: impl Into<String>,
        time: i64,
    ) -> Self {
        Event {
            id: id.into(),
            subj: subj.into(),
            act: act.into(),
            obj: obj.into(),
            time,
            extra: BTreeMap::new(),
        }
    }

    /// Value of a specification field. `subj`, `act`, `obj` and `time` are
    /// built in; anything else is looked up in `extra`.
    pub fn field(&self, name: &str) -> Option<Value> {
        match name {
            "subj" => Some(Value::str(&self.subj)),
            "act" => Some(Value::str(&self.act)),
            "obj" => Some(Value::str(&self.obj)),
            "time" => Some(Value::Int(self.time)),
            _ => self.extra.get(name).cloned(),
        }
    }

    /// The specification as a record, one attribute per field.
    pub fn spec_record(&self) -> Record {
        let mut r = Record::default()
            .with("subj", self.subj.as_str())
            .with("act", self.act.as_str())
            .with("obj", self.obj.as_str())
            .with("time", self.time);
        for (k, v) in &self.extra {
            r.set(k.clone(), v.clone());
        }
        r
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{{act={}, subj={}, obj={}, time={}}}",
            self.id, self.act, self.subj, self.obj, self.time
        )
    }
}

/// A generic event `ge[X₁, …, Xₙ]`: a pattern over event fields whose values
/// may be variables.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "SchemeRepr", into = "SchemeRepr")]
pub struct EventScheme {
    name: String,
    vars: Vec<String>,
    pattern: BTreeMap<String, Term>,
}

#[derive(Serialize, Deserialize)]
struct SchemeRepr {
    name: String,
    #[serde(default)]
    vars: Vec<String>,
    pattern: BTreeMap<String, Value>,
}

impl TryFrom<SchemeRepr> for EventScheme {
    type Error = ObligationError;

    fn try_from(r: SchemeRepr) -> Result<Self, Self::Error> {
        let pattern = r
            .pattern
            .into_iter()
            .map(|(k, v)| {
                let t = match &v {
                    Value::Str(s) if s.starts_with(VAR_PREFIX) => Term::var(&s[VAR_PREFIX.len_utf8()..]),
                    _ => Term::Val(v),
                };
                (k, t)
            })
            .collect();
        EventScheme::new(r.name, r.vars, pattern)
    }
}

impl From<EventScheme> for SchemeRepr {
    fn from(s: EventScheme) -> Self {
        let pattern = s
            .pattern
            .into_iter()
            .map(|(k, t)| {
                let v = match t {
                    Term::Val(v) => v,
                    Term::Var { var } => Value::Str(format!("{VAR_PREFIX}{var}")),
                };
                (k, v)
            })
            .collect();
        SchemeRepr { name: s.name, vars: s.vars, pattern }
    }
}

impl EventScheme {
    /// Every variable used in `pattern` must be listed in `vars`.
    pub fn new(
        name: impl Into<String>,
        vars: Vec<String>,
        pattern: BTreeMap<String, Term>,
    ) -> Result<Self, ObligationError> {
        let name = name.into();
        let declared: BTreeSet<&str> = vars.iter().map(String::as_str).collect();
        for t in pattern.values() {
            if let Term::Var { var } = t {
                if !declared.contains(var.as_str()) {
                    return Err(ObligationError::UndeclaredVariable { scheme: name, var: var.clone() });
                }
            }
        }
        Ok(EventScheme { name, vars, pattern })
    }

    /// A scheme without variables.
    pub fn ground(name: impl Into<String>, pattern: impl IntoIterator<Item = (&'static str, Value)>) -> Self {
        let pattern = pattern.into_iter().map(|(k, v)| (k.to_string(), Term::Val(v))).collect();
        EventScheme { name: name.into(), vars: Vec::new(), pattern }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn pattern(&self) -> &BTreeMap<String, Term> {
        &self.pattern
    }

    fn pattern_record(&self) -> Record {
        let mut r = Record::default();
        for (k, t) in &self.pattern {
            r.set(k.clone(), t.clone());
        }
        r
    }
}

impl fmt::Display for EventScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// `e :: ge`: the variable bindings under which `e` instantiates `ge`, or
/// `None` when some ground field differs, a field is missing, or a variable
/// would need two different values.
pub fn event_matches_scheme(e: &Event, ge: &EventScheme) -> Option<BTreeMap<String, Value>> {
    let mut b = BTreeMap::new();
    ge.pattern_record().matches(&e.spec_record(), &mut b).then_some(b)
}
