use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::rc::Rc;

use crate::state::{ObjectValue, Pos, RawState};

/// Runtime value. Pairs are two-element lists, so `[x, y]` positions and
/// tuple results share one representation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DslValue {
    None,
    Bool(bool),
    Int(i64),
    Str(Rc<str>),
    List(Rc<Vec<DslValue>>),
    Map(Rc<BTreeMap<String, DslValue>>),
}

impl DslValue {
    pub fn str(s: &str) -> Self {
        DslValue::Str(Rc::from(s))
    }

    pub fn list(items: Vec<DslValue>) -> Self {
        DslValue::List(Rc::new(items))
    }

    pub fn map(m: BTreeMap<String, DslValue>) -> Self {
        DslValue::Map(Rc::new(m))
    }

    pub fn pair(x: i64, y: i64) -> Self {
        DslValue::list(vec![DslValue::Int(x), DslValue::Int(y)])
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            DslValue::None => "none",
            DslValue::Bool(_) => "bool",
            DslValue::Int(_) => "int",
            DslValue::Str(_) => "str",
            DslValue::List(_) => "list",
            DslValue::Map(_) => "map",
        }
    }

    pub fn truthy(&self) -> bool {
        match self {
            DslValue::None => false,
            DslValue::Bool(b) => *b,
            DslValue::Int(i) => *i != 0,
            DslValue::Str(s) => !s.is_empty(),
            DslValue::List(l) => !l.is_empty(),
            DslValue::Map(m) => !m.is_empty(),
        }
    }

    /// Element count used for step and memory accounting.
    pub fn weight(&self) -> usize {
        match self {
            DslValue::Str(s) => s.len(),
            DslValue::List(l) => l.len(),
            DslValue::Map(m) => m.len(),
            _ => 1,
        }
    }

    pub fn as_pos(&self) -> Option<Pos> {
        match self {
            DslValue::List(l) if l.len() == 2 => match (&l[0], &l[1]) {
                (DslValue::Int(x), DslValue::Int(y)) => Some(Pos::new(*x, *y)),
                _ => None,
            },
            _ => None,
        }
    }

    /// Ordering for `<`, `sorted`, `min` and `max`; `None` when the
    /// operands are not comparable.
    pub fn compare(&self, other: &DslValue) -> Option<Ordering> {
        match (self, other) {
            (DslValue::Int(a), DslValue::Int(b)) => Some(a.cmp(b)),
            (DslValue::Bool(a), DslValue::Bool(b)) => Some(a.cmp(b)),
            (DslValue::Int(a), DslValue::Bool(b)) => Some(a.cmp(&(*b as i64))),
            (DslValue::Bool(a), DslValue::Int(b)) => Some((*a as i64).cmp(b)),
            (DslValue::Str(a), DslValue::Str(b)) => Some(a.cmp(b)),
            (DslValue::List(a), DslValue::List(b)) => {
                for (x, y) in a.iter().zip(b.iter()) {
                    match x.compare(y)? {
                        Ordering::Equal => continue,
                        o => return Some(o),
                    }
                }
                Some(a.len().cmp(&b.len()))
            }
            _ => None,
        }
    }

    pub fn from_object(v: &ObjectValue) -> Self {
        match v {
            ObjectValue::Positions(ps) => DslValue::list(ps.iter().map(|p| DslValue::pair(p.x, p.y)).collect()),
            ObjectValue::Scalar(p) => DslValue::pair(p.x, p.y),
            ObjectValue::Names(ns) => DslValue::list(ns.iter().map(|n| DslValue::str(n)).collect()),
        }
    }

    pub fn from_state(s: &RawState) -> Self {
        DslValue::map(
            s.iter()
                .map(|(k, v)| (k.to_string(), DslValue::from_object(v)))
                .collect(),
        )
    }

    /// Converts a returned map back into a raw state. Values must be a
    /// position pair, a list of pairs, or a list of strings.
    pub fn to_state(&self) -> Result<RawState, String> {
        let DslValue::Map(m) = self else {
            return Err(format!("transition must return a map, got {}", self.type_name()));
        };
        let mut out = RawState::default();
        for (k, v) in m.iter() {
            if !crate::state::is_valid_key(k) {
                return Err(format!("invalid state key `{k}`"));
            }
            let obj = match v {
                DslValue::List(items) => {
                    if let Some(p) = v.as_pos() {
                        ObjectValue::Scalar(p)
                    } else if items.iter().all(|i| matches!(i, DslValue::Str(_))) && !items.is_empty() {
                        ObjectValue::Names(
                            items
                                .iter()
                                .map(|i| match i {
                                    DslValue::Str(s) => s.to_string(),
                                    _ => unreachable!(),
                                })
                                .collect(),
                        )
                    } else {
                        let ps = items
                            .iter()
                            .map(|i| {
                                i.as_pos()
                                    .ok_or_else(|| format!("key `{k}` holds a non-position element {i}"))
                            })
                            .collect::<Result<Vec<_>, _>>()?;
                        ObjectValue::Positions(ps)
                    }
                }
                other => return Err(format!("key `{k}` holds a {} value", other.type_name())),
            };
            out.set(k, obj);
        }
        Ok(out)
    }
}

impl fmt::Display for DslValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DslValue::None => write!(f, "None"),
            DslValue::Bool(true) => write!(f, "True"),
            DslValue::Bool(false) => write!(f, "False"),
            DslValue::Int(i) => write!(f, "{i}"),
            DslValue::Str(s) => write!(f, "{s}"),
            DslValue::List(items) => {
                write!(f, "[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    v.fmt_repr(f)?;
                }
                write!(f, "]")
            }
            DslValue::Map(m) => {
                write!(f, "{{")?;
                for (i, (k, v)) in m.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "'{k}': ")?;
                    v.fmt_repr(f)?;
                }
                write!(f, "}}")
            }
        }
    }
}

impl DslValue {
    fn fmt_repr(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DslValue::Str(s) => write!(f, "'{s}'"),
            other => write!(f, "{other}"),
        }
    }
}
