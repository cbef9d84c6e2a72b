//! Object-oriented game state shared by every other module.
//!
//! A [`RawState`] maps lowercase object names to one of three value kinds:
//! a list of `[x, y]` positions, a single integer pair attribute such as
//! `agent_direction`, or a list of object names such as `agent_carrying`.
//! Keys are always held in sorted order so equality is structural and the
//! text form is byte-deterministic.

use std::collections::BTreeMap;
use std::fmt;

use serde_json::Value as Json;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StateError {
    #[error("invalid key `{0}`: keys must be non-empty and match [a-z0-9_]+")]
    InvalidKey(String),
    #[error("malformed value for `{key}`: {reason}")]
    MalformedValue { key: String, reason: String },
    #[error("duplicate key `{0}`")]
    DuplicateKey(String),
    #[error("parse error at {line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("delta does not apply: {0}")]
    DeltaMismatch(String),
}

/// Grid coordinate. `x` grows rightward, `y` grows downward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub x: i64,
    pub y: i64,
}

impl Pos {
    pub const fn new(x: i64, y: i64) -> Self {
        Pos { x, y }
    }

    pub fn offset(self, d: Pos) -> Pos {
        Pos::new(self.x + d.x, self.y + d.y)
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.x, self.y)
    }
}

/// The three value kinds a state entry may hold.
///
/// An empty list has a single canonical form, `Positions(vec![])`, because
/// an empty position list and an empty name list are indistinguishable in
/// the text format.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ObjectValue {
    Positions(Vec<Pos>),
    Scalar(Pos),
    Names(Vec<String>),
}

impl ObjectValue {
    pub fn positions(&self) -> &[Pos] {
        match self {
            ObjectValue::Positions(p) => p,
            _ => &[],
        }
    }

    pub fn names(&self) -> &[String] {
        match self {
            ObjectValue::Names(n) => n,
            _ => &[],
        }
    }

    pub fn is_empty_list(&self) -> bool {
        match self {
            ObjectValue::Positions(p) => p.is_empty(),
            ObjectValue::Names(n) => n.is_empty(),
            ObjectValue::Scalar(_) => false,
        }
    }

    fn canonical(self) -> Self {
        match self {
            ObjectValue::Names(n) if n.is_empty() => ObjectValue::Positions(Vec::new()),
            other => other,
        }
    }

    fn from_json(key: &str, value: &Json) -> Result<Self, StateError> {
        let malformed = |reason: &str| StateError::MalformedValue {
            key: key.to_string(),
            reason: reason.to_string(),
        };
        let items = value.as_array().ok_or_else(|| malformed("expected a list"))?;
        if items.is_empty() {
            return Ok(ObjectValue::Positions(Vec::new()));
        }
        if items.iter().all(Json::is_string) {
            let names = items
                .iter()
                .map(|v| v.as_str().unwrap_or_default().to_string())
                .collect();
            return Ok(ObjectValue::Names(names));
        }
        if items.iter().all(Json::is_array) {
            let mut out = Vec::with_capacity(items.len());
            for item in items {
                out.push(json_pair(item).ok_or_else(|| malformed("every coordinate must be a pair of integers"))?);
            }
            return Ok(ObjectValue::Positions(out));
        }
        json_pair(value)
            .map(ObjectValue::Scalar)
            .ok_or_else(|| malformed("expected [x,y], [[x,y],...] or [\"name\",...]"))
    }

    pub fn to_json(&self) -> Json {
        match self {
            ObjectValue::Positions(ps) => Json::Array(ps.iter().map(|p| serde_json::json!([p.x, p.y])).collect()),
            ObjectValue::Scalar(p) => serde_json::json!([p.x, p.y]),
            ObjectValue::Names(ns) => Json::Array(ns.iter().cloned().map(Json::String).collect()),
        }
    }
}

fn json_pair(value: &Json) -> Option<Pos> {
    let arr = value.as_array()?;
    if arr.len() != 2 {
        return None;
    }
    Some(Pos::new(arr[0].as_i64()?, arr[1].as_i64()?))
}

impl fmt::Display for ObjectValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectValue::Positions(ps) => {
                f.write_str("[")?;
                for (i, p) in ps.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{p}")?;
                }
                f.write_str("]")
            }
            ObjectValue::Scalar(p) => write!(f, "{p}"),
            ObjectValue::Names(ns) => {
                f.write_str("[")?;
                for (i, n) in ns.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "\"{n}\"")?;
                }
                f.write_str("]")
            }
        }
    }
}

pub fn is_valid_key(key: &str) -> bool {
    !key.is_empty()
        && key
            .bytes()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_')
}

/// Canonical object-oriented state.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RawState {
    entries: BTreeMap<String, ObjectValue>,
}

impl RawState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a canonical state from loosely ordered `(key, json value)` pairs.
    pub fn canonicalize<I, K>(raw: I) -> Result<Self, StateError>
    where
        I: IntoIterator<Item = (K, Json)>,
        K: Into<String>,
    {
        let mut entries = BTreeMap::new();
        for (key, value) in raw {
            let key = key.into();
            if !is_valid_key(&key) {
                return Err(StateError::InvalidKey(key));
            }
            let value = ObjectValue::from_json(&key, &value)?;
            if entries.insert(key.clone(), value).is_some() {
                return Err(StateError::DuplicateKey(key));
            }
        }
        Ok(RawState { entries })
    }

    /// Re-canonicalizes an already typed entry list (keys validated, empty lists unified).
    pub fn from_entries<I>(entries: I) -> Result<Self, StateError>
    where
        I: IntoIterator<Item = (String, ObjectValue)>,
    {
        let mut out = RawState::new();
        for (k, v) in entries {
            if !is_valid_key(&k) {
                return Err(StateError::InvalidKey(k));
            }
            if out.entries.insert(k.clone(), v.canonical()).is_some() {
                return Err(StateError::DuplicateKey(k));
            }
        }
        Ok(out)
    }

    pub fn from_json(value: &Json) -> Result<Self, StateError> {
        let obj = value.as_object().ok_or_else(|| StateError::MalformedValue {
            key: String::new(),
            reason: "state must be a JSON object".into(),
        })?;
        Self::canonicalize(obj.iter().map(|(k, v)| (k.clone(), v.clone())))
    }

    pub fn to_json(&self) -> Json {
        Json::Object(self.entries.iter().map(|(k, v)| (k.clone(), v.to_json())).collect())
    }

    pub fn get(&self, key: &str) -> Option<&ObjectValue> {
        self.entries.get(key)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn positions(&self, key: &str) -> &[Pos] {
        self.entries.get(key).map(ObjectValue::positions).unwrap_or(&[])
    }

    pub fn names(&self, key: &str) -> &[String] {
        self.entries.get(key).map(ObjectValue::names).unwrap_or(&[])
    }

    pub fn scalar(&self, key: &str) -> Option<Pos> {
        match self.entries.get(key) {
            Some(ObjectValue::Scalar(p)) => Some(*p),
            _ => None,
        }
    }

    /// Inserts or replaces an entry. Panics on an invalid key; callers
    /// building states from untrusted text go through [`RawState::canonicalize`].
    pub fn set(&mut self, key: impl Into<String>, value: ObjectValue) {
        let key = key.into();
        assert!(is_valid_key(&key), "invalid state key `{key}`");
        self.entries.insert(key, value.canonical());
    }

    pub fn remove(&mut self, key: &str) -> Option<ObjectValue> {
        self.entries.remove(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &ObjectValue)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Every key whose position list contains `p`.
    pub fn objects_at(&self, p: Pos) -> impl Iterator<Item = &str> {
        self.entries.iter().filter_map(move |(k, v)| match v {
            ObjectValue::Positions(ps) if ps.contains(&p) => Some(k.as_str()),
            _ => None,
        })
    }

    /// Byte-deterministic text form: one `key: value` line per entry, or `{}` when empty.
    pub fn serialize(&self) -> String {
        if self.entries.is_empty() {
            return "{}\n".to_string();
        }
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push_str(": ");
            out.push_str(&v.to_string());
            out.push('\n');
        }
        out
    }

    /// Parses the text form. Blank lines and `#` comment lines are ignored.
    pub fn deserialize(text: &str) -> Result<Self, StateError> {
        let mut state = RawState::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') || trimmed == "{}" {
                continue;
            }
            let indent = line.len() - line.trim_start().len();
            let colon = trimmed.find(':').ok_or(StateError::Parse {
                line: line_no,
                column: indent + 1,
                message: "expected `key: value`".into(),
            })?;
            let key = trimmed[..colon].trim();
            if !is_valid_key(key) {
                return Err(StateError::Parse {
                    line: line_no,
                    column: indent + 1,
                    message: format!("invalid key `{key}`"),
                });
            }
            let value_col = indent + colon + 2;
            let mut parser = ValueParser {
                src: &trimmed.as_bytes()[colon + 1..],
                at: 0,
                line: line_no,
                col0: value_col,
            };
            let value = parser.parse_value()?;
            if state.entries.insert(key.to_string(), value.canonical()).is_some() {
                return Err(StateError::Parse {
                    line: line_no,
                    column: indent + 1,
                    message: format!("duplicate key `{key}`"),
                });
            }
        }
        Ok(state)
    }

    pub fn diff(&self, after: &RawState) -> StateDelta {
        let mut delta = StateDelta::default();
        for (k, v) in &self.entries {
            match after.entries.get(k) {
                None => {
                    delta.removed.insert(k.clone(), v.clone());
                }
                Some(w) if w != v => {
                    delta.changed.insert(k.clone(), (v.clone(), w.clone()));
                }
                Some(_) => {}
            }
        }
        for (k, w) in &after.entries {
            if !self.entries.contains_key(k) {
                delta.added.insert(k.clone(), w.clone());
            }
        }
        delta
    }

    pub fn apply(&self, delta: &StateDelta) -> Result<RawState, StateError> {
        let mut out = self.clone();
        for (k, v) in &delta.removed {
            match out.entries.remove(k) {
                Some(ref cur) if cur == v => {}
                _ => return Err(StateError::DeltaMismatch(format!("cannot remove `{k}`"))),
            }
        }
        for (k, (old, new)) in &delta.changed {
            match out.entries.get_mut(k) {
                Some(cur) if cur == old => *cur = new.clone(),
                _ => return Err(StateError::DeltaMismatch(format!("cannot change `{k}`"))),
            }
        }
        for (k, v) in &delta.added {
            if out.entries.insert(k.clone(), v.clone()).is_some() {
                return Err(StateError::DeltaMismatch(format!("`{k}` already present")));
            }
        }
        Ok(out)
    }
}

impl fmt::Display for RawState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

struct ValueParser<'a> {
    src: &'a [u8],
    at: usize,
    line: usize,
    col0: usize,
}

impl ValueParser<'_> {
    fn err(&self, message: impl Into<String>) -> StateError {
        StateError::Parse {
            line: self.line,
            column: self.col0 + self.at,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.at < self.src.len() && self.src[self.at].is_ascii_whitespace() {
            self.at += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.at).copied()
    }

    fn expect(&mut self, b: u8) -> Result<(), StateError> {
        if self.peek() == Some(b) {
            self.at += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected `{}`", b as char)))
        }
    }

    fn parse_value(&mut self) -> Result<ObjectValue, StateError> {
        self.expect(b'[')?;
        let value = match self.peek() {
            Some(b']') => {
                self.at += 1;
                ObjectValue::Positions(Vec::new())
            }
            Some(b'[') => {
                let mut ps = vec![self.parse_pair()?];
                while self.peek() == Some(b',') {
                    self.at += 1;
                    ps.push(self.parse_pair()?);
                }
                self.expect(b']')?;
                ObjectValue::Positions(ps)
            }
            Some(b'"') => {
                let mut ns = vec![self.parse_name()?];
                while self.peek() == Some(b',') {
                    self.at += 1;
                    ns.push(self.parse_name()?);
                }
                self.expect(b']')?;
                ObjectValue::Names(ns)
            }
            _ => {
                let x = self.parse_int()?;
                self.expect(b',')?;
                let y = self.parse_int()?;
                self.expect(b']')?;
                ObjectValue::Scalar(Pos::new(x, y))
            }
        };
        if self.peek().is_some() {
            return Err(self.err("trailing characters after value"));
        }
        Ok(value)
    }

    fn parse_pair(&mut self) -> Result<Pos, StateError> {
        self.expect(b'[')?;
        let x = self.parse_int()?;
        self.expect(b',')?;
        let y = self.parse_int()?;
        self.expect(b']')?;
        Ok(Pos::new(x, y))
    }

    fn parse_int(&mut self) -> Result<i64, StateError> {
        self.skip_ws();
        let start = self.at;
        if self.src.get(self.at) == Some(&b'-') {
            self.at += 1;
        }
        while self.at < self.src.len() && self.src[self.at].is_ascii_digit() {
            self.at += 1;
        }
        std::str::from_utf8(&self.src[start..self.at])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| {
                self.at = start;
                self.err("expected integer")
            })
    }

    fn parse_name(&mut self) -> Result<String, StateError> {
        self.expect(b'"')?;
        let start = self.at;
        while self.at < self.src.len() && self.src[self.at] != b'"' {
            self.at += 1;
        }
        if self.at >= self.src.len() {
            return Err(self.err("unterminated string"));
        }
        let name = String::from_utf8_lossy(&self.src[start..self.at]).into_owned();
        self.at += 1;
        if !is_valid_key(&name) {
            self.at = start;
            return Err(self.err(format!("invalid object name `{name}`")));
        }
        Ok(name)
    }
}

/// Primitive action drawn from an environment's action space.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Action(pub String);

impl Action {
    pub fn new(name: impl Into<String>) -> Self {
        Action(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Action {
    fn from(s: &str) -> Self {
        Action(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub before: RawState,
    pub action: Action,
    pub after: RawState,
    /// Grounded operator being pursued, e.g. `moveontop(avatar,goal)`.
    pub operator_tag: Option<String>,
}

impl Transition {
    pub fn new(before: RawState, action: Action, after: RawState) -> Self {
        Transition {
            before,
            action,
            after,
            operator_tag: None,
        }
    }

    pub fn tagged(mut self, tag: impl Into<String>) -> Self {
        self.operator_tag = Some(tag.into());
        self
    }

    pub fn delta(&self) -> StateDelta {
        self.before.diff(&self.after)
    }
}

/// Minimal difference between two states.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StateDelta {
    pub added: BTreeMap<String, ObjectValue>,
    pub removed: BTreeMap<String, ObjectValue>,
    pub changed: BTreeMap<String, (ObjectValue, ObjectValue)>,
}

impl StateDelta {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty() && self.changed.is_empty()
    }
}

impl fmt::Display for StateDelta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("  (no change)\n");
        }
        for (k, v) in &self.removed {
            writeln!(f, "  - {k}: {v}")?;
        }
        for (k, v) in &self.added {
            writeln!(f, "  + {k}: {v}")?;
        }
        for (k, (old, new)) in &self.changed {
            writeln!(f, "  ~ {k}: {old} -> {new}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn st(v: Json) -> RawState {
        RawState::from_json(&v).unwrap()
    }

    #[test]
    fn canonicalize_sorts_and_is_order_independent() {
        let a = RawState::canonicalize(vec![("mug", json!([[4, 4]])), ("table", json!([[3, 4]]))]).unwrap();
        let b = RawState::canonicalize(vec![("table", json!([[3, 4]])), ("mug", json!([[4, 4]]))]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.keys().collect::<Vec<_>>(), vec!["mug", "table"]);
    }

    #[test]
    fn canonicalize_keeps_all_three_value_kinds() {
        let s = RawState::canonicalize(vec![
            ("red_agent", json!([[3, 4]])),
            ("agent_direction", json!([0, 1])),
            ("agent_carrying", json!(["red_key"])),
        ])
        .unwrap();
        assert_eq!(s.positions("red_agent"), &[Pos::new(3, 4)]);
        assert_eq!(s.scalar("agent_direction"), Some(Pos::new(0, 1)));
        assert_eq!(s.names("agent_carrying"), &["red_key".to_string()]);
        let again = RawState::from_entries(s.iter().map(|(k, v)| (k.to_string(), v.clone()))).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn canonicalize_rejects_bad_input() {
        assert!(matches!(
            RawState::canonicalize(vec![("Red-Agent", json!([[1, 1]]))]),
            Err(StateError::InvalidKey(_))
        ));
        assert!(matches!(
            RawState::canonicalize(vec![("box", json!([[1.5, 1]]))]),
            Err(StateError::MalformedValue { .. })
        ));
        assert!(matches!(
            RawState::canonicalize(vec![("box", json!([[1, 1, 1]]))]),
            Err(StateError::MalformedValue { .. })
        ));
        assert!(matches!(
            RawState::canonicalize(vec![("", json!([]))]),
            Err(StateError::InvalidKey(_))
        ));
    }

    #[test]
    fn empty_lists_have_one_form() {
        let a = st(json!({"agent_carrying": []}));
        let mut b = RawState::new();
        b.set("agent_carrying", ObjectValue::Names(vec![]));
        assert_eq!(a, b);
        assert_eq!(a.serialize(), "agent_carrying: []\n");
    }

    #[test]
    fn diff_of_identical_states_is_empty() {
        let s = st(json!({"avatar": [[1, 1]], "goal": [[3, 1]]}));
        assert!(s.diff(&s).is_empty());
    }

    #[test]
    fn diff_reports_box_falling_into_hole() {
        let before = st(json!({"avatar": [[1, 1]], "box": [[2, 1]], "hole": [[3, 1]]}));
        let after = st(json!({"avatar": [[2, 1]], "hole": [[3, 1]]}));
        let d = before.diff(&after);
        assert_eq!(
            d.removed.get("box"),
            Some(&ObjectValue::Positions(vec![Pos::new(2, 1)]))
        );
        assert_eq!(before.apply(&d).unwrap(), after);
    }

    #[test]
    fn diff_reports_door_unlock_as_rename() {
        let before = st(json!({"locked_blue_door": [[3, 2]], "red_agent": [[2, 2]]}));
        let after = st(json!({"open_blue_door": [[3, 2]], "red_agent": [[2, 2]]}));
        let d = before.diff(&after);
        assert!(d.removed.contains_key("locked_blue_door"));
        assert_eq!(
            d.added.get("open_blue_door"),
            Some(&ObjectValue::Positions(vec![Pos::new(3, 2)]))
        );
        assert!(d.changed.is_empty());
    }

    #[test]
    fn apply_rejects_stale_delta() {
        let a = st(json!({"avatar": [[1, 1]]}));
        let b = st(json!({"avatar": [[2, 1]]}));
        let d = a.diff(&b);
        assert!(b.apply(&d).is_err());
    }

    #[test]
    fn empty_state_text_form() {
        assert_eq!(RawState::new().serialize(), "{}\n");
        assert_eq!(RawState::deserialize("{}").unwrap(), RawState::new());
    }

    #[test]
    fn serialize_is_line_oriented_and_sorted() {
        let s = st(json!({
            "red_agent": [[3, 4]],
            "agent_direction": [0, 1],
            "agent_carrying": ["red_key"],
            "grey_wall": [[0, 0], [1, 0]]
        }));
        assert_eq!(
            s.serialize(),
            "agent_carrying: [\"red_key\"]\nagent_direction: [0,1]\ngrey_wall: [[0,0],[1,0]]\nred_agent: [[3,4]]\n"
        );
        assert_eq!(RawState::deserialize(&s.serialize()).unwrap(), s);
    }

    #[test]
    fn deserialize_reports_location() {
        let err = RawState::deserialize("avatar: [[1,1]]\ngoal: [[2,x]]\n").unwrap_err();
        match err {
            StateError::Parse { line, column, .. } => {
                assert_eq!(line, 2);
                assert_eq!(column, 11);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            RawState::deserialize("avatar [[1,1]]"),
            Err(StateError::Parse { line: 1, .. })
        ));
        assert!(RawState::deserialize("a: [[1,1]]\na: [[2,2]]").is_err());
    }
}
