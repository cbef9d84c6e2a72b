use std::collections::BTreeMap;
use std::rc::Rc;

use super::interp::{fault, list_index, map_key, Interp};
use super::value::DslValue;
use super::{EvalError, FaultKind};
use crate::pddl::DEFAULT_CONFIG_PREFIXES;
use crate::state::Pos;

type R<T> = Result<T, EvalError>;

/// One entry of the builtin catalog shown to the model author.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuiltinDoc {
    pub name: &'static str,
    pub signature: &'static str,
    pub summary: &'static str,
}

const fn doc(name: &'static str, signature: &'static str, summary: &'static str) -> BuiltinDoc {
    BuiltinDoc {
        name,
        signature,
        summary,
    }
}

pub const UP: Pos = Pos::new(0, -1);
pub const DOWN: Pos = Pos::new(0, 1);
pub const LEFT: Pos = Pos::new(-1, 0);
pub const RIGHT: Pos = Pos::new(1, 0);

static CATALOG: &[BuiltinDoc] = &[
    doc(
        "directions",
        "directions",
        "map from 'up', 'down', 'left', 'right' to unit vectors; x grows right, y grows down, so up is [0, -1]",
    ),
    doc("get", "get(m, key, default)", "m[key] if present, otherwise default"),
    doc(
        "pos",
        "pos(state, name)",
        "first position of object `name` (a lone pair is returned as is), or None when absent",
    ),
    doc(
        "positions",
        "positions(state, name)",
        "all positions of object `name`, or [] when absent",
    ),
    doc("add", "add(p, q)", "component-wise sum of two positions"),
    doc("sub", "sub(p, q)", "component-wise difference of two positions"),
    doc("manhattan", "manhattan(p, q)", "|dx| + |dy| between two positions"),
    doc(
        "neighbor",
        "neighbor(p, direction)",
        "p moved one cell in the named direction",
    ),
    doc(
        "insert",
        "insert(coll, x) / insert(m, key, value)",
        "copy of a list with x appended, or of a map with key set",
    ),
    doc(
        "remove",
        "remove(coll, x) / remove(m, key)",
        "copy without the first occurrence of x, or without key; unchanged if absent",
    ),
    doc(
        "contains",
        "contains(coll, x)",
        "membership test for lists, maps (keys) and strings",
    ),
    doc("has_prefix", "has_prefix(s, prefix)", "s starts with prefix"),
    doc("has_suffix", "has_suffix(s, suffix)", "s ends with suffix"),
    doc(
        "strip_prefix",
        "strip_prefix(s, prefix)",
        "s without a leading prefix; unchanged if it does not start with it",
    ),
    doc(
        "swap_prefix",
        "swap_prefix(s, old, new)",
        "replace a leading `old` with `new`, e.g. 'locked_blue_door' -> 'open_blue_door'",
    ),
    doc("len", "len(x)", "length of a list, map or string"),
    doc("range", "range(stop) / range(start, stop[, step])", "integer sequence"),
    doc("abs", "abs(n)", "absolute value"),
    doc("min", "min(a, b, ...) / min(list)", "smallest element"),
    doc("max", "max(a, b, ...) / max(list)", "largest element"),
    doc("sum", "sum(list)", "integer sum"),
    doc("any", "any(list)", "true if some element is truthy"),
    doc("all", "all(list)", "true if every element is truthy"),
    doc("sorted", "sorted(list)", "ascending copy"),
    doc("reversed", "reversed(list)", "reversed copy"),
    doc("list", "list(x)", "list of the elements (map keys, string characters)"),
    doc("tuple", "tuple(x)", "same as list(x); pairs are two-element lists"),
    doc("dict", "dict() / dict(m)", "empty map or a copy of m"),
    doc("str", "str(x)", "text form of x"),
    doc("int", "int(x)", "integer from a bool, int or decimal string"),
    doc("bool", "bool(x)", "truthiness of x"),
    doc("enumerate", "enumerate(list)", "list of [index, element] pairs"),
    doc(
        "zip",
        "zip(a, b, ...)",
        "list of element tuples, truncated to the shortest input",
    ),
    doc(
        "isinstance",
        "isinstance(x, type)",
        "type test against list, dict, str, int or bool",
    ),
];

/// Methods callable on values, grouped by receiver type.
static METHODS: &[BuiltinDoc] = &[
    doc(
        "map",
        "get keys values items copy pop update setdefault clear",
        "dictionary methods",
    ),
    doc(
        "list",
        "append extend insert remove pop clear index count copy",
        "list methods; mutating ones act on the named variable or subscript",
    ),
    doc(
        "str",
        "startswith endswith split replace join strip lower upper count index format",
        "string methods",
    ),
];

/// The fixed builtin catalog.
pub fn builtin_library() -> &'static [BuiltinDoc] {
    CATALOG
}

/// Catalog rendered as the text block given to the model author.
pub fn render_catalog() -> String {
    let mut out = String::from("# Available in `from utils import ...` (all are also in scope by default)\n");
    for d in CATALOG {
        out.push_str(&format!("# {:<40} {}\n", d.signature, d.summary));
    }
    for d in METHODS {
        out.push_str(&format!("# {} methods: {}\n", d.name, d.signature));
    }
    out
}

pub fn is_builtin(name: &str) -> bool {
    name != "directions" && CATALOG.iter().any(|d| d.name == name)
}

pub fn is_constant(name: &str) -> bool {
    name == "directions"
}

pub fn constant(name: &str) -> Option<DslValue> {
    match name {
        "directions" => {
            let mut m = BTreeMap::new();
            for (k, p) in [("up", UP), ("down", DOWN), ("left", LEFT), ("right", RIGHT)] {
                m.insert(k.to_string(), DslValue::pair(p.x, p.y));
            }
            Some(DslValue::map(m))
        }
        // type objects for isinstance
        "list" | "tuple" | "dict" | "str" | "int" | "bool" => Some(DslValue::str(&format!("<type {name}>"))),
        _ => None,
    }
}

pub fn is_mutating_method(name: &str) -> bool {
    matches!(
        name,
        "append" | "extend" | "insert" | "remove" | "pop" | "clear" | "update" | "setdefault"
    )
}

fn arity(name: &str, args: &[DslValue], range: std::ops::RangeInclusive<usize>, line: usize) -> R<()> {
    if !range.contains(&args.len()) {
        return Err(fault(
            FaultKind::ArityMismatch,
            line,
            format!("{name}() got {} arguments", args.len()),
        ));
    }
    Ok(())
}

fn type_err(line: usize, msg: String) -> EvalError {
    fault(FaultKind::TypeMismatch, line, msg)
}

fn int(v: &DslValue, what: &str, line: usize) -> R<i64> {
    match v {
        DslValue::Int(i) => Ok(*i),
        DslValue::Bool(b) => Ok(*b as i64),
        other => Err(type_err(line, format!("{what} expects int, got {}", other.type_name()))),
    }
}

fn string<'a>(v: &'a DslValue, what: &str, line: usize) -> R<&'a str> {
    match v {
        DslValue::Str(s) => Ok(s),
        other => Err(type_err(line, format!("{what} expects str, got {}", other.type_name()))),
    }
}

fn position(v: &DslValue, what: &str, line: usize) -> R<Pos> {
    v.as_pos()
        .ok_or_else(|| type_err(line, format!("{what} expects a position [x, y], got {v}")))
}

fn overflow(line: usize) -> EvalError {
    fault(FaultKind::Overflow, line, "integer overflow")
}

pub fn range_bounds(args: &[DslValue], line: usize) -> R<(i64, i64, i64)> {
    arity("range", args, 1..=3, line)?;
    let v = args.iter().map(|a| int(a, "range", line)).collect::<R<Vec<_>>>()?;
    let (start, stop, step) = match v.as_slice() {
        [stop] => (0, *stop, 1),
        [start, stop] => (*start, *stop, 1),
        [start, stop, step] => (*start, *stop, *step),
        _ => unreachable!(),
    };
    if step == 0 {
        return Err(fault(FaultKind::ValueError, line, "range() step must not be zero"));
    }
    Ok((start, stop, step))
}

/// Object lookup shared by `pos` and `positions`: an exact key, or a key
/// that adds a configuration prefix such as `locked_` to the name.
fn object_value<'a>(state: &'a BTreeMap<String, DslValue>, name: &str) -> Option<&'a DslValue> {
    state.get(name).or_else(|| {
        DEFAULT_CONFIG_PREFIXES
            .iter()
            .find_map(|p| state.get(&format!("{p}{name}")))
    })
}

fn pair_of(p: Pos) -> DslValue {
    DslValue::pair(p.x, p.y)
}

fn seq_items(interp: &mut Interp, v: &DslValue, what: &str, line: usize) -> R<Rc<Vec<DslValue>>> {
    interp
        .iter_items(v, line)
        .map_err(|_| type_err(line, format!("{what} expects a collection, got {}", v.type_name())))
}

fn extreme(interp: &mut Interp, name: &str, args: Vec<DslValue>, line: usize, want: std::cmp::Ordering) -> R<DslValue> {
    let items: Vec<DslValue> = if args.len() == 1 {
        seq_items(interp, &args[0], name, line)?.to_vec()
    } else {
        args
    };
    let mut best: Option<DslValue> = None;
    for v in items {
        best = Some(match best {
            None => v,
            Some(b) => {
                if interp.cmp(&v, &b, line)? == want {
                    v
                } else {
                    b
                }
            }
        });
    }
    best.ok_or_else(|| fault(FaultKind::ValueError, line, format!("{name}() of an empty sequence")))
}

pub fn call(interp: &mut Interp, name: &str, args: Vec<DslValue>, line: usize) -> R<DslValue> {
    use DslValue as V;
    interp.tick(1)?;
    match name {
        "len" => {
            arity(name, &args, 1..=1, line)?;
            match &args[0] {
                V::Str(s) => Ok(V::Int(s.chars().count() as i64)),
                V::List(l) => Ok(V::Int(l.len() as i64)),
                V::Map(m) => Ok(V::Int(m.len() as i64)),
                other => Err(type_err(line, format!("len() of {}", other.type_name()))),
            }
        }
        "range" => {
            let (start, stop, step) = range_bounds(&args, line)?;
            let n = if step > 0 {
                (stop as i128 - start as i128 + step as i128 - 1) / step as i128
            } else {
                (start as i128 - stop as i128 - step as i128 - 1) / (-(step as i128))
            }
            .max(0);
            interp.check_len(usize::try_from(n).unwrap_or(usize::MAX))?;
            interp.tick(n as u64)?;
            Ok(V::list((0..n as i64).map(|i| V::Int(start + i * step)).collect()))
        }
        "abs" => {
            arity(name, &args, 1..=1, line)?;
            Ok(V::Int(
                int(&args[0], name, line)?.checked_abs().ok_or_else(|| overflow(line))?,
            ))
        }
        "min" => extreme(interp, name, args, line, std::cmp::Ordering::Less),
        "max" => extreme(interp, name, args, line, std::cmp::Ordering::Greater),
        "sum" => {
            arity(name, &args, 1..=2, line)?;
            let items = seq_items(interp, &args[0], name, line)?;
            let mut acc = match args.get(1) {
                Some(v) => v.clone(),
                None => V::Int(0),
            };
            for v in items.iter() {
                interp.tick(1)?;
                acc = interp.binop(super::ast::BinOp::Add, acc, v.clone(), line)?;
            }
            Ok(acc)
        }
        "any" | "all" => {
            arity(name, &args, 1..=1, line)?;
            let items = seq_items(interp, &args[0], name, line)?;
            interp.tick(items.len() as u64)?;
            Ok(V::Bool(if name == "any" {
                items.iter().any(|v| v.truthy())
            } else {
                items.iter().all(|v| v.truthy())
            }))
        }
        "sorted" => {
            arity(name, &args, 1..=1, line)?;
            let mut items = seq_items(interp, &args[0], name, line)?.to_vec();
            interp.sort(&mut items, line)?;
            Ok(V::list(items))
        }
        "reversed" => {
            arity(name, &args, 1..=1, line)?;
            let mut items = seq_items(interp, &args[0], name, line)?.to_vec();
            interp.tick(items.len() as u64)?;
            items.reverse();
            Ok(V::list(items))
        }
        "list" | "tuple" => {
            arity(name, &args, 0..=1, line)?;
            match args.first() {
                None => Ok(V::list(Vec::new())),
                Some(v) => {
                    let items = seq_items(interp, v, name, line)?;
                    interp.tick(items.len() as u64)?;
                    Ok(V::List(items))
                }
            }
        }
        "dict" => {
            arity(name, &args, 0..=1, line)?;
            match args.first() {
                None => Ok(V::map(BTreeMap::new())),
                Some(m @ V::Map(_)) => Ok(m.clone()),
                Some(other) => Err(type_err(line, format!("dict() of {}", other.type_name()))),
            }
        }
        "str" => {
            arity(name, &args, 1..=1, line)?;
            let s = interp.render(&args[0])?;
            Ok(V::str(&s))
        }
        "int" => {
            arity(name, &args, 1..=1, line)?;
            match &args[0] {
                V::Str(s) => s
                    .trim()
                    .parse::<i64>()
                    .map(V::Int)
                    .map_err(|_| fault(FaultKind::ValueError, line, format!("invalid literal for int(): '{s}'"))),
                other => Ok(V::Int(int(other, name, line)?)),
            }
        }
        "bool" => {
            arity(name, &args, 1..=1, line)?;
            Ok(V::Bool(args[0].truthy()))
        }
        "enumerate" => {
            arity(name, &args, 1..=1, line)?;
            let items = seq_items(interp, &args[0], name, line)?;
            interp.tick(items.len() as u64)?;
            Ok(V::list(
                items
                    .iter()
                    .enumerate()
                    .map(|(i, v)| V::list(vec![V::Int(i as i64), v.clone()]))
                    .collect(),
            ))
        }
        "zip" => {
            let cols = args
                .iter()
                .map(|a| seq_items(interp, a, name, line))
                .collect::<R<Vec<_>>>()?;
            let n = cols.iter().map(|c| c.len()).min().unwrap_or(0);
            interp.tick(n as u64)?;
            Ok(V::list(
                (0..n)
                    .map(|i| V::list(cols.iter().map(|c| c[i].clone()).collect()))
                    .collect(),
            ))
        }
        "isinstance" => {
            arity(name, &args, 2..=2, line)?;
            let t = string(&args[1], name, line)?;
            Ok(V::Bool(match t {
                "<type list>" | "<type tuple>" => matches!(args[0], V::List(_)),
                "<type dict>" => matches!(args[0], V::Map(_)),
                "<type str>" => matches!(args[0], V::Str(_)),
                "<type int>" => matches!(args[0], V::Int(_)),
                "<type bool>" => matches!(args[0], V::Bool(_)),
                _ => return Err(type_err(line, "isinstance() needs a type".into())),
            }))
        }
        "get" => {
            arity(name, &args, 2..=3, line)?;
            let default = args.get(2).cloned().unwrap_or(V::None);
            match &args[0] {
                V::Map(m) => {
                    let k = map_key(&args[1], line)?;
                    Ok(m.get(k).cloned().unwrap_or(default))
                }
                V::List(l) => {
                    let i = int(&args[1], name, line)?;
                    Ok(list_index(&V::Int(i), l.len(), line)
                        .map(|i| l[i].clone())
                        .unwrap_or(default))
                }
                V::None => Ok(default),
                other => Err(type_err(line, format!("get() on {}", other.type_name()))),
            }
        }
        "pos" | "positions" => {
            arity(name, &args, 2..=2, line)?;
            let V::Map(state) = &args[0] else {
                return Err(type_err(line, format!("{name}() expects a state map")));
            };
            let obj = string(&args[1], name, line)?;
            let found = object_value(state, obj);
            let all: Vec<DslValue> = match found {
                None => Vec::new(),
                Some(v) if v.as_pos().is_some() => vec![v.clone()],
                Some(V::List(items)) => items.iter().filter(|i| i.as_pos().is_some()).cloned().collect(),
                Some(_) => Vec::new(),
            };
            if name == "positions" {
                Ok(V::list(all))
            } else {
                Ok(all.into_iter().next().unwrap_or(V::None))
            }
        }
        "add" | "sub" => {
            arity(name, &args, 2..=2, line)?;
            let p = position(&args[0], name, line)?;
            let q = position(&args[1], name, line)?;
            let (x, y) = if name == "add" {
                (p.x.checked_add(q.x), p.y.checked_add(q.y))
            } else {
                (p.x.checked_sub(q.x), p.y.checked_sub(q.y))
            };
            match (x, y) {
                (Some(x), Some(y)) => Ok(V::pair(x, y)),
                _ => Err(overflow(line)),
            }
        }
        "manhattan" => {
            arity(name, &args, 2..=2, line)?;
            let p = position(&args[0], name, line)?;
            let q = position(&args[1], name, line)?;
            let d =
                p.x.checked_sub(q.x)
                    .and_then(i64::checked_abs)
                    .zip(p.y.checked_sub(q.y).and_then(i64::checked_abs))
                    .and_then(|(a, b)| a.checked_add(b))
                    .ok_or_else(|| overflow(line))?;
            Ok(V::Int(d))
        }
        "neighbor" => {
            arity(name, &args, 2..=2, line)?;
            let p = position(&args[0], name, line)?;
            let dir = string(&args[1], name, line)?;
            let d = match dir {
                "up" => UP,
                "down" => DOWN,
                "left" => LEFT,
                "right" => RIGHT,
                other => {
                    return Err(fault(
                        FaultKind::ValueError,
                        line,
                        format!("unknown direction '{other}'"),
                    ))
                }
            };
            let q =
                p.x.checked_add(d.x)
                    .zip(p.y.checked_add(d.y))
                    .ok_or_else(|| overflow(line))?;
            Ok(pair_of(Pos::new(q.0, q.1)))
        }
        "insert" => match (&args[0..args.len().min(1)], args.len()) {
            ([V::List(l)], 2) => {
                interp.check_len(l.len() + 1)?;
                interp.tick(l.len() as u64)?;
                let mut v = l.to_vec();
                v.push(args[1].clone());
                Ok(V::list(v))
            }
            ([V::Map(m)], 3) => {
                interp.check_len(m.len() + 1)?;
                interp.tick(m.len() as u64)?;
                let mut m = (**m).clone();
                m.insert(map_key(&args[1], line)?.to_string(), args[2].clone());
                Ok(V::map(m))
            }
            _ => Err(type_err(line, "insert() expects (list, x) or (map, key, value)".into())),
        },
        "remove" => {
            arity(name, &args, 2..=2, line)?;
            match &args[0] {
                V::List(l) => {
                    let mut v = l.to_vec();
                    let mut idx = None;
                    for (i, item) in l.iter().enumerate() {
                        if interp.eq(item, &args[1])? {
                            idx = Some(i);
                            break;
                        }
                    }
                    if let Some(i) = idx {
                        v.remove(i);
                    }
                    Ok(V::list(v))
                }
                V::Map(m) => {
                    interp.tick(m.len() as u64)?;
                    let mut m = (**m).clone();
                    m.remove(map_key(&args[1], line)?);
                    Ok(V::map(m))
                }
                other => Err(type_err(line, format!("remove() on {}", other.type_name()))),
            }
        }
        "contains" => {
            arity(name, &args, 2..=2, line)?;
            Ok(V::Bool(interp.contains(&args[0], &args[1], line)?))
        }
        "has_prefix" | "has_suffix" | "strip_prefix" => {
            arity(name, &args, 2..=2, line)?;
            let s = string(&args[0], name, line)?;
            let p = string(&args[1], name, line)?;
            Ok(match name {
                "has_prefix" => V::Bool(s.starts_with(p)),
                "has_suffix" => V::Bool(s.ends_with(p)),
                _ => V::str(s.strip_prefix(p).unwrap_or(s)),
            })
        }
        "swap_prefix" => {
            arity(name, &args, 3..=3, line)?;
            let s = string(&args[0], name, line)?;
            let old = string(&args[1], name, line)?;
            let new = string(&args[2], name, line)?;
            Ok(match s.strip_prefix(old) {
                Some(rest) => {
                    interp.check_len(new.len() + rest.len())?;
                    V::str(&format!("{new}{rest}"))
                }
                None => args[0].clone(),
            })
        }
        _ => Err(fault(
            FaultKind::UndefinedName,
            line,
            format!("unknown function `{name}`"),
        )),
    }
}

/// Methods that change their receiver in place.
pub fn mutate(
    interp: &mut Interp,
    target: &mut DslValue,
    name: &str,
    args: Vec<DslValue>,
    line: usize,
    max: usize,
) -> R<DslValue> {
    use DslValue as V;
    interp.tick(1)?;
    match target {
        V::List(l) => match name {
            "append" => {
                arity(name, &args, 1..=1, line)?;
                interp.check_len(l.len() + 1)?;
                Rc::make_mut(l).push(args.into_iter().next().expect("arity checked"));
                Ok(V::None)
            }
            "extend" => {
                arity(name, &args, 1..=1, line)?;
                let more = interp.iter_items(&args[0], line)?;
                interp.check_len(l.len() + more.len())?;
                interp.tick(more.len() as u64)?;
                Rc::make_mut(l).extend(more.iter().cloned());
                Ok(V::None)
            }
            "insert" => {
                arity(name, &args, 2..=2, line)?;
                interp.check_len(l.len() + 1)?;
                let i = int(&args[0], name, line)?;
                let len = l.len() as i64;
                let at = if i < 0 { (len + i).max(0) } else { i.min(len) } as usize;
                interp.tick(l.len() as u64)?;
                Rc::make_mut(l).insert(at, args[1].clone());
                Ok(V::None)
            }
            "remove" => {
                arity(name, &args, 1..=1, line)?;
                let mut idx = None;
                for (i, item) in l.iter().enumerate() {
                    if interp.eq(item, &args[0])? {
                        idx = Some(i);
                        break;
                    }
                }
                match idx {
                    Some(i) => {
                        Rc::make_mut(l).remove(i);
                        Ok(V::None)
                    }
                    None => Err(fault(
                        FaultKind::ValueError,
                        line,
                        format!("list.remove(x): {} not in list", args[0]),
                    )),
                }
            }
            "pop" => {
                arity(name, &args, 0..=1, line)?;
                let i = match args.first() {
                    Some(k) => list_index(k, l.len(), line)?,
                    None if l.is_empty() => return Err(fault(FaultKind::IndexOutOfRange, line, "pop from empty list")),
                    None => l.len() - 1,
                };
                interp.tick((l.len() - i) as u64)?;
                Ok(Rc::make_mut(l).remove(i))
            }
            "clear" => {
                *l = Rc::new(Vec::new());
                Ok(V::None)
            }
            _ => Err(type_err(line, format!("list has no method `{name}`"))),
        },
        V::Map(m) => match name {
            "pop" => {
                arity(name, &args, 1..=2, line)?;
                let k = map_key(&args[0], line)?;
                match Rc::make_mut(m).remove(k) {
                    Some(v) => Ok(v),
                    None => args
                        .get(1)
                        .cloned()
                        .ok_or_else(|| fault(FaultKind::MissingKey, line, format!("key '{k}' not found"))),
                }
            }
            "update" => {
                arity(name, &args, 1..=1, line)?;
                let V::Map(other) = &args[0] else {
                    return Err(type_err(line, "update() expects a map".into()));
                };
                interp.tick(other.len() as u64)?;
                let dst = Rc::make_mut(m);
                for (k, v) in other.iter() {
                    dst.insert(k.clone(), v.clone());
                }
                if dst.len() > max {
                    return Err(EvalError::MemoryLimit {
                        limit: max,
                        requested: dst.len(),
                    });
                }
                Ok(V::None)
            }
            "setdefault" => {
                arity(name, &args, 2..=2, line)?;
                let k = map_key(&args[0], line)?.to_string();
                interp.check_len(m.len() + 1)?;
                Ok(Rc::make_mut(m).entry(k).or_insert_with(|| args[1].clone()).clone())
            }
            "clear" => {
                *m = Rc::new(BTreeMap::new());
                Ok(V::None)
            }
            _ => Err(type_err(line, format!("map has no method `{name}`"))),
        },
        other => Err(type_err(line, format!("{} has no method `{name}`", other.type_name()))),
    }
}

/// Methods that leave their receiver unchanged.
pub fn method(interp: &mut Interp, recv: &DslValue, name: &str, args: Vec<DslValue>, line: usize) -> R<DslValue> {
    use DslValue as V;
    interp.tick(1)?;
    match (recv, name) {
        (V::Map(m), "get") => {
            arity(name, &args, 1..=2, line)?;
            let k = map_key(&args[0], line)?;
            Ok(m.get(k)
                .cloned()
                .unwrap_or_else(|| args.get(1).cloned().unwrap_or(V::None)))
        }
        (V::Map(m), "keys") => {
            interp.tick(m.len() as u64)?;
            Ok(V::list(m.keys().map(|k| V::str(k)).collect()))
        }
        (V::Map(m), "values") => {
            interp.tick(m.len() as u64)?;
            Ok(V::list(m.values().cloned().collect()))
        }
        (V::Map(m), "items") => {
            interp.tick(m.len() as u64)?;
            Ok(V::list(
                m.iter().map(|(k, v)| V::list(vec![V::str(k), v.clone()])).collect(),
            ))
        }
        (V::Map(_) | V::List(_), "copy") => Ok(recv.clone()),
        (V::List(l), "index") => {
            arity(name, &args, 1..=1, line)?;
            for (i, item) in l.iter().enumerate() {
                if interp.eq(item, &args[0])? {
                    return Ok(V::Int(i as i64));
                }
            }
            Err(fault(
                FaultKind::ValueError,
                line,
                format!("{} is not in list", args[0]),
            ))
        }
        (V::List(l), "count") => {
            arity(name, &args, 1..=1, line)?;
            let mut n = 0;
            for item in l.iter() {
                if interp.eq(item, &args[0])? {
                    n += 1;
                }
            }
            Ok(V::Int(n))
        }
        (V::Str(s), _) => str_method(interp, s, name, args, line),
        _ => Err(type_err(line, format!("{} has no method `{name}`", recv.type_name()))),
    }
}

fn str_method(interp: &mut Interp, s: &str, name: &str, args: Vec<DslValue>, line: usize) -> R<DslValue> {
    use DslValue as V;
    interp.tick(s.len() as u64 / 8 + 1)?;
    match name {
        "startswith" | "endswith" => {
            arity(name, &args, 1..=1, line)?;
            let p = string(&args[0], name, line)?;
            Ok(V::Bool(if name == "startswith" {
                s.starts_with(p)
            } else {
                s.ends_with(p)
            }))
        }
        "split" => {
            arity(name, &args, 0..=2, line)?;
            let parts: Vec<DslValue> = match args.first() {
                None | Some(V::None) => s.split_whitespace().map(V::str).collect(),
                Some(sep) => {
                    let sep = string(sep, name, line)?;
                    if sep.is_empty() {
                        return Err(fault(FaultKind::ValueError, line, "empty separator"));
                    }
                    match args.get(1) {
                        Some(n) => {
                            let n = int(n, name, line)?;
                            if n < 0 {
                                s.split(sep).map(V::str).collect()
                            } else {
                                s.splitn(n as usize + 1, sep).map(V::str).collect()
                            }
                        }
                        None => s.split(sep).map(V::str).collect(),
                    }
                }
            };
            Ok(V::list(parts))
        }
        "replace" => {
            arity(name, &args, 2..=2, line)?;
            let old = string(&args[0], name, line)?;
            let new = string(&args[1], name, line)?;
            if old.is_empty() {
                return Err(fault(FaultKind::ValueError, line, "replace() with an empty pattern"));
            }
            let count = s.matches(old).count();
            interp.check_len(s.len() - count * old.len() + count * new.len())?;
            Ok(V::str(&s.replace(old, new)))
        }
        "join" => {
            arity(name, &args, 1..=1, line)?;
            let items = interp.iter_items(&args[0], line)?;
            let mut out = String::new();
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(s);
                }
                out.push_str(string(item, name, line)?);
                interp.check_len(out.len())?;
            }
            interp.tick(items.len() as u64)?;
            Ok(V::str(&out))
        }
        "strip" => Ok(V::str(s.trim())),
        "lower" => Ok(V::str(&s.to_lowercase())),
        "upper" => Ok(V::str(&s.to_uppercase())),
        "count" => {
            arity(name, &args, 1..=1, line)?;
            let p = string(&args[0], name, line)?;
            if p.is_empty() {
                return Ok(V::Int(s.chars().count() as i64 + 1));
            }
            Ok(V::Int(s.matches(p).count() as i64))
        }
        "index" | "find" => {
            arity(name, &args, 1..=1, line)?;
            let p = string(&args[0], name, line)?;
            match s.find(p) {
                Some(b) => Ok(V::Int(s[..b].chars().count() as i64)),
                None if name == "find" => Ok(V::Int(-1)),
                None => Err(fault(FaultKind::ValueError, line, "substring not found")),
            }
        }
        "format" => {
            // positional `{}` only
            let mut out = String::new();
            let mut it = args.iter();
            let mut rest = s;
            while let Some(i) = rest.find("{}") {
                out.push_str(&rest[..i]);
                let v = it
                    .next()
                    .ok_or_else(|| fault(FaultKind::ValueError, line, "format() has too few arguments"))?;
                out.push_str(&interp.render(v)?);
                interp.check_len(out.len())?;
                rest = &rest[i + 2..];
            }
            out.push_str(rest);
            Ok(V::str(&out))
        }
        _ => Err(type_err(line, format!("str has no method `{name}`"))),
    }
}
