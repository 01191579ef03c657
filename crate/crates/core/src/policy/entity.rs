use std::fmt;

use serde::{Deserialize, Serialize};

use crate::portgraph::Value;

/// Node types of a policy graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeType {
    /// Principal.
    P,
    /// Category.
    C,
    /// Action.
    A,
    /// Resource.
    R,
    /// Event scheme.
    G,
    /// Event.
    E,
    /// Permission `(a, r)`.
    Pr,
    /// Generic obligation `(a, r, ge₁, ge₂)`.
    O,
    /// Duty `(p, a, r, e₁, e₂)`.
    D,
}

impl NodeType {
    pub const ALL: [NodeType; 9] = [
        NodeType::P,
        NodeType::C,
        NodeType::A,
        NodeType::R,
        NodeType::G,
        NodeType::E,
        NodeType::Pr,
        NodeType::O,
        NodeType::D,
    ];

    pub fn code(self) -> &'static str {
        match self {
            NodeType::P => "P",
            NodeType::C => "C",
            NodeType::A => "A",
            NodeType::R => "R",
            NodeType::G => "G",
            NodeType::E => "E",
            NodeType::Pr => "Pr",
            NodeType::O => "O",
            NodeType::D => "D",
        }
    }

    pub fn parse(s: &str) -> Option<NodeType> {
        NodeType::ALL.into_iter().find(|t| t.code() == s)
    }

    /// Categories, events and schemes carry `In`/`Out` ports for their
    /// directed edges.
    pub fn port_names(self) -> &'static [&'static str] {
        match self {
            NodeType::C | NodeType::E | NodeType::G => &["main", "In", "Out"],
            _ => &["main"],
        }
    }

    pub fn word(self) -> &'static str {
        match self {
            NodeType::P => "principal",
            NodeType::C => "category",
            NodeType::A => "action",
            NodeType::R => "resource",
            NodeType::G => "event scheme",
            NodeType::E => "event",
            NodeType::Pr => "permission",
            NodeType::O => "obligation",
            NodeType::D => "duty",
        }
    }
}

impl fmt::Display for NodeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.word())
    }
}

/// `(a, r, ge₁, ge₂)`; `None` stands for ⊥.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GenericObligation {
    pub action: String,
    pub resource: String,
    pub start: Option<String>,
    pub end: Option<String>,
}

/// `(p, a, r, e₁, e₂)`; `None` stands for ⊥.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DutySpec {
    pub principal: String,
    pub action: String,
    pub resource: String,
    pub start: Option<String>,
    pub end: Option<String>,
}

fn bot(x: &Option<String>) -> String {
    x.clone().unwrap_or_else(|| "⊥".into())
}

impl fmt::Display for GenericObligation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.action, self.resource, bot(&self.start), bot(&self.end))
    }
}

impl fmt::Display for DutySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {}, {}, {})",
            self.principal,
            self.action,
            self.resource,
            bot(&self.start),
            bot(&self.end)
        )
    }
}

/// The entity a node stands for.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "ent")]
pub enum EntityRef {
    Principal(String),
    Category(String),
    Action(String),
    Resource(String),
    Scheme(String),
    Event(String),
    Permission { action: String, resource: String },
    Obligation(GenericObligation),
    Duty(DutySpec),
}

fn opt(v: &Value) -> Option<Option<String>> {
    match v {
        Value::Bot => Some(None),
        Value::Str(s) => Some(Some(s.clone())),
        _ => None,
    }
}

fn opt_value(x: &Option<String>) -> Value {
    x.as_ref().map_or(Value::Bot, Value::str)
}

impl EntityRef {
    pub fn node_type(&self) -> NodeType {
        match self {
            EntityRef::Principal(_) => NodeType::P,
            EntityRef::Category(_) => NodeType::C,
            EntityRef::Action(_) => NodeType::A,
            EntityRef::Resource(_) => NodeType::R,
            EntityRef::Scheme(_) => NodeType::G,
            EntityRef::Event(_) => NodeType::E,
            EntityRef::Permission { .. } => NodeType::Pr,
            EntityRef::Obligation(_) => NodeType::O,
            EntityRef::Duty(_) => NodeType::D,
        }
    }

    /// Name of an atomic entity, or the display form of a composite one.
    pub fn name(&self) -> String {
        match self {
            EntityRef::Principal(s)
            | EntityRef::Category(s)
            | EntityRef::Action(s)
            | EntityRef::Resource(s)
            | EntityRef::Scheme(s)
            | EntityRef::Event(s) => s.clone(),
            _ => self.to_string(),
        }
    }

    /// Encoding stored in the node's `ent` attribute.
    pub fn to_value(&self) -> Value {
        match self {
            EntityRef::Principal(s)
            | EntityRef::Category(s)
            | EntityRef::Action(s)
            | EntityRef::Resource(s)
            | EntityRef::Scheme(s)
            | EntityRef::Event(s) => Value::str(s),
            EntityRef::Permission { action, resource } => Value::Tuple(vec![Value::str(action), Value::str(resource)]),
            EntityRef::Obligation(o) => Value::Tuple(vec![
                Value::str(&o.action),
                Value::str(&o.resource),
                opt_value(&o.start),
                opt_value(&o.end),
            ]),
            EntityRef::Duty(d) => Value::Tuple(vec![
                Value::str(&d.principal),
                Value::str(&d.action),
                Value::str(&d.resource),
                opt_value(&d.start),
                opt_value(&d.end),
            ]),
        }
    }

    /// Decode an `ent` value for a node of type `ty`. `None` when the arity or
    /// shape does not fit the type.
    pub fn from_value(ty: NodeType, v: &Value) -> Option<EntityRef> {
        let atom = || v.as_str().map(str::to_string);
        let s = |x: &Value| x.as_str().map(str::to_string);
        Some(match ty {
            NodeType::P => EntityRef::Principal(atom()?),
            NodeType::C => EntityRef::Category(atom()?),
            NodeType::A => EntityRef::Action(atom()?),
            NodeType::R => EntityRef::Resource(atom()?),
            NodeType::G => EntityRef::Scheme(atom()?),
            NodeType::E => EntityRef::Event(atom()?),
            NodeType::Pr => match v.as_tuple()? {
                [a, r] => EntityRef::Permission { action: s(a)?, resource: s(r)? },
                _ => return None,
            },
            NodeType::O => match v.as_tuple()? {
                [a, r, g1, g2] => EntityRef::Obligation(GenericObligation {
                    action: s(a)?,
                    resource: s(r)?,
                    start: opt(g1)?,
                    end: opt(g2)?,
                }),
                _ => return None,
            },
            NodeType::D => match v.as_tuple()? {
                [p, a, r, e1, e2] => EntityRef::Duty(DutySpec {
                    principal: s(p)?,
                    action: s(a)?,
                    resource: s(r)?,
                    start: opt(e1)?,
                    end: opt(e2)?,
                }),
                _ => return None,
            },
        })
    }
}

impl fmt::Display for EntityRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntityRef::Permission { action, resource } => write!(f, "({action}, {resource})"),
            EntityRef::Obligation(o) => write!(f, "{o}"),
            EntityRef::Duty(d) => write!(f, "{d}"),
            _ => f.write_str(&self.name()),
        }
    }
}

/// `auth` of a `CPr` edge: authorization or ban.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Auth {
    A,
    B,
}

impl Auth {
    pub fn code(self) -> &'static str {
        match self {
            Auth::A => "A",
            Auth::B => "B",
        }
    }
}

/// Initial or final end of an obligation (`ge`) or duty (`ev`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Phase {
    I,
    F,
}

impl Phase {
    pub fn code(self) -> &'static str {
        match self {
            Phase::I => "i",
            Phase::F => "f",
        }
    }

    pub fn parse(s: &str) -> Option<Phase> {
        match s {
            "i" => Some(Phase::I),
            "f" => Some(Phase::F),
            _ => None,
        }
    }
}

/// The seventeen edge types, with their type-specific attributes. Targets of
/// `CC`, `GG` and `EE` edges are kept outside the kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    PC,
    CC { auth: bool, obl: bool },
    CPr(Auth),
    CO,
    PrA,
    PrR,
    OPr,
    OG(Phase),
    DP,
    DPr,
    DE(Phase),
    EE,
    EP,
    EA,
    ER,
    EG,
    GG,
}

impl EdgeKind {
    pub fn code(&self) -> &'static str {
        match self {
            EdgeKind::PC => "PC",
            EdgeKind::CC { .. } => "CC",
            EdgeKind::CPr(_) => "CPr",
            EdgeKind::CO => "CO",
            EdgeKind::PrA => "PrA",
            EdgeKind::PrR => "PrR",
            EdgeKind::OPr => "OPr",
            EdgeKind::OG(_) => "OG",
            EdgeKind::DP => "DP",
            EdgeKind::DPr => "DPr",
            EdgeKind::DE(_) => "DE",
            EdgeKind::EE => "EE",
            EdgeKind::EP => "EP",
            EdgeKind::EA => "EA",
            EdgeKind::ER => "ER",
            EdgeKind::EG => "EG",
            EdgeKind::GG => "GG",
        }
    }

    pub fn has_target(&self) -> bool {
        matches!(self, EdgeKind::CC { .. } | EdgeKind::GG | EdgeKind::EE)
    }

    /// The edge type joining two node types, if the pair is allowed. The pair
    /// is unordered.
    pub fn code_for(a: NodeType, b: NodeType) -> Option<&'static str> {
        use NodeType::*;
        let (x, y) = if a <= b { (a, b) } else { (b, a) };
        Some(match (x, y) {
            (P, C) => "PC",
            (C, C) => "CC",
            (C, Pr) => "CPr",
            (C, O) => "CO",
            (A, Pr) => "PrA",
            (R, Pr) => "PrR",
            (Pr, O) => "OPr",
            (G, O) => "OG",
            (P, D) => "DP",
            (Pr, D) => "DPr",
            (E, D) => "DE",
            (E, E) => "EE",
            (P, E) => "EP",
            (A, E) => "EA",
            (R, E) => "ER",
            (G, E) => "EG",
            (G, G) => "GG",
            _ => return None,
        })
    }

    /// Whether the edge belongs to the obligation structure (as opposed to
    /// the permission/prohibition structure). `PC`, `PrA` and `PrR` are
    /// shared and answer `None`; `CC` depends on its flags.
    pub fn obligation_side(&self) -> Option<bool> {
        match self {
            EdgeKind::PC | EdgeKind::PrA | EdgeKind::PrR | EdgeKind::CC { .. } => None,
            EdgeKind::CPr(_) => Some(false),
            _ => Some(true),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entity_values_round_trip() {
        let ents = [
            EntityRef::Principal("p".into()),
            EntityRef::Permission { action: "a".into(), resource: "r".into() },
            EntityRef::Obligation(GenericObligation {
                action: "a".into(),
                resource: "r".into(),
                start: Some("g".into()),
                end: None,
            }),
            EntityRef::Duty(DutySpec {
                principal: "p".into(),
                action: "a".into(),
                resource: "r".into(),
                start: None,
                end: Some("e".into()),
            }),
        ];
        for e in ents {
            assert_eq!(EntityRef::from_value(e.node_type(), &e.to_value()), Some(e));
        }
    }

    #[test]
    fn arity_checked() {
        let v = Value::Tuple(vec![Value::str("a")]);
        assert_eq!(EntityRef::from_value(NodeType::Pr, &v), None);
        assert_eq!(EntityRef::from_value(NodeType::P, &v), None);
    }

    #[test]
    fn seventeen_edge_types() {
        let mut codes = std::collections::BTreeSet::new();
        for a in NodeType::ALL {
            for b in NodeType::ALL {
                if let Some(c) = EdgeKind::code_for(a, b) {
                    codes.insert(c);
                }
            }
        }
        assert_eq!(codes.len(), 17);
    }
}
