use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::rc::Rc;

use super::ast::*;
use super::builtins;
use super::value::DslValue;
use super::{EvalError, FaultKind, Limits, RuntimeFault};

pub(crate) type Frame = HashMap<String, DslValue>;

type R<T> = Result<T, EvalError>;

enum Flow {
    Next,
    Return(DslValue),
    Break,
    Continue,
}

pub(crate) struct Interp<'m> {
    pub module: &'m Module,
    pub limits: Limits,
    steps: u64,
    depth: usize,
    globals: Frame,
}

pub(crate) fn fault(kind: FaultKind, line: usize, message: impl Into<String>) -> EvalError {
    EvalError::Runtime(RuntimeFault {
        kind,
        line,
        message: message.into(),
    })
}

impl<'m> Interp<'m> {
    pub fn new(module: &'m Module, limits: Limits) -> Self {
        Interp {
            module,
            limits,
            steps: 0,
            depth: 0,
            globals: Frame::new(),
        }
    }

    /// Runs top-level assignments, then calls `entry`.
    pub fn run(&mut self, entry: &str, args: Vec<DslValue>) -> R<DslValue> {
        let mut g = Frame::new();
        for s in &self.module.globals {
            if let Flow::Return(_) = self.exec(&mut g, s)? {
                break;
            }
        }
        self.globals = g;
        self.call_user(entry, args, 0)
    }

    pub fn tick(&mut self, n: u64) -> R<()> {
        self.steps = self.steps.saturating_add(n);
        if self.steps > self.limits.step_budget {
            return Err(EvalError::StepBudgetExceeded {
                budget: self.limits.step_budget,
            });
        }
        Ok(())
    }

    pub fn check_len(&self, n: usize) -> R<()> {
        if n > self.limits.max_collection_len {
            return Err(EvalError::MemoryLimit {
                limit: self.limits.max_collection_len,
                requested: n,
            });
        }
        Ok(())
    }

    fn fuel(&self) -> u64 {
        self.limits.step_budget.saturating_sub(self.steps)
    }

    /// Structural equality, charged per visited node.
    pub fn eq(&mut self, a: &DslValue, b: &DslValue) -> R<bool> {
        let mut fuel = self.fuel();
        let start = fuel;
        let out = eq_fuel(a, b, &mut fuel);
        self.tick(start - fuel)?;
        out.ok_or(EvalError::StepBudgetExceeded {
            budget: self.limits.step_budget,
        })
    }

    pub fn cmp(&mut self, a: &DslValue, b: &DslValue, line: usize) -> R<Ordering> {
        let mut fuel = self.fuel();
        let start = fuel;
        let out = cmp_fuel(a, b, &mut fuel);
        self.tick(start - fuel)?;
        match out {
            Err(()) => Err(EvalError::StepBudgetExceeded {
                budget: self.limits.step_budget,
            }),
            Ok(Some(o)) => Ok(o),
            Ok(None) => Err(fault(
                FaultKind::TypeMismatch,
                line,
                format!("cannot order {} and {}", a.type_name(), b.type_name()),
            )),
        }
    }

    pub fn sort(&mut self, items: &mut [DslValue], line: usize) -> R<()> {
        self.tick(items.len() as u64)?;
        let mut err = None;
        let mut fuel = self.fuel();
        let start = fuel;
        items.sort_by(|a, b| {
            if err.is_some() {
                return Ordering::Equal;
            }
            match cmp_fuel(a, b, &mut fuel) {
                Ok(Some(o)) => o,
                Ok(None) => {
                    err = Some(fault(
                        FaultKind::TypeMismatch,
                        line,
                        format!("cannot order {} and {}", a.type_name(), b.type_name()),
                    ));
                    Ordering::Equal
                }
                Err(()) => {
                    err = Some(EvalError::StepBudgetExceeded {
                        budget: self.limits.step_budget,
                    });
                    Ordering::Equal
                }
            }
        });
        self.tick(start - fuel)?;
        err.map_or(Ok(()), Err)
    }

    /// Python-style `str()` rendering, bounded by the collection limit.
    pub fn render(&mut self, v: &DslValue) -> R<String> {
        let mut out = Bounded {
            buf: String::new(),
            limit: self.limits.max_collection_len,
        };
        if write!(out, "{v}").is_err() {
            return Err(EvalError::MemoryLimit {
                limit: self.limits.max_collection_len,
                requested: self.limits.max_collection_len + 1,
            });
        }
        self.tick(out.buf.len() as u64 / 8 + 1)?;
        Ok(out.buf)
    }

    fn call_user(&mut self, name: &str, args: Vec<DslValue>, line: usize) -> R<DslValue> {
        let f = self
            .module
            .function(name)
            .ok_or_else(|| fault(FaultKind::UndefinedName, line, format!("no function `{name}`")))?;
        if f.params.len() != args.len() {
            return Err(fault(
                FaultKind::ArityMismatch,
                line,
                format!("`{name}` takes {} arguments, got {}", f.params.len(), args.len()),
            ));
        }
        self.depth += 1;
        if self.depth > self.limits.max_call_depth {
            return Err(EvalError::StepBudgetExceeded {
                budget: self.limits.step_budget,
            });
        }
        let mut frame: Frame = f.params.iter().cloned().zip(args).collect();
        let out = self.exec_block(&mut frame, &f.body);
        self.depth -= 1;
        match out? {
            Flow::Return(v) => Ok(v),
            _ => Ok(DslValue::None),
        }
    }

    fn exec_block(&mut self, frame: &mut Frame, body: &[Stmt]) -> R<Flow> {
        for s in body {
            match self.exec(frame, s)? {
                Flow::Next => {}
                other => return Ok(other),
            }
        }
        Ok(Flow::Next)
    }

    fn exec(&mut self, frame: &mut Frame, s: &Stmt) -> R<Flow> {
        self.tick(1)?;
        let line = s.line;
        match &s.kind {
            StmtKind::Expr(e) => {
                self.eval(frame, e)?;
            }
            StmtKind::Assign(Target::Place(p), e) => {
                let v = self.eval(frame, e)?;
                self.assign(frame, p, v, line)?;
            }
            StmtKind::Assign(Target::Unpack(names), e) => {
                let v = self.eval(frame, e)?;
                let items = self.unpack(&v, names.len(), line)?;
                for (n, v) in names.iter().zip(items) {
                    frame.insert(n.clone(), v);
                }
            }
            StmtKind::AugAssign(p, op, e) => {
                let rhs = self.eval(frame, e)?;
                let keys = self.eval_keys(frame, &p.path)?;
                let cur = self.read_place(frame, &p.root, &keys, line)?;
                let v = self.binop(*op, cur, rhs, line)?;
                self.write_place(frame, &p.root, &keys, v, line)?;
            }
            StmtKind::If(arms, other) => {
                for (cond, body) in arms {
                    if self.eval(frame, cond)?.truthy() {
                        return self.exec_block(frame, body);
                    }
                }
                return self.exec_block(frame, other);
            }
            StmtKind::For(targets, iter, body) => return self.exec_for(frame, targets, iter, body, line),
            StmtKind::Return(e) => {
                let v = match e {
                    Some(e) => self.eval(frame, e)?,
                    None => DslValue::None,
                };
                return Ok(Flow::Return(v));
            }
            StmtKind::Del(p) => {
                let keys = self.eval_keys(frame, &p.path)?;
                match keys.split_last() {
                    None => {
                        if frame.remove(&p.root).is_none() {
                            return Err(fault(
                                FaultKind::UndefinedName,
                                line,
                                format!("name `{}` is not defined", p.root),
                            ));
                        }
                    }
                    Some((last, parents)) => {
                        let container = self.place_mut(frame, &p.root, parents, line)?;
                        delete_key(container, last, line)?;
                    }
                }
            }
            StmtKind::Break => return Ok(Flow::Break),
            StmtKind::Continue => return Ok(Flow::Continue),
            StmtKind::Pass => {}
        }
        Ok(Flow::Next)
    }

    fn exec_for(&mut self, frame: &mut Frame, targets: &[String], iter: &Expr, body: &[Stmt], line: usize) -> R<Flow> {
        // `range` is iterated lazily so large bounds only cost what runs
        if let ExprKind::Call(name, args) = &iter.kind {
            if name == "range" && self.module.function("range").is_none() {
                let vals = args.iter().map(|a| self.eval(frame, a)).collect::<R<Vec<_>>>()?;
                let (start, stop, step) = builtins::range_bounds(&vals, line)?;
                let mut i = start;
                while (step > 0 && i < stop) || (step < 0 && i > stop) {
                    self.tick(1)?;
                    self.bind(frame, targets, DslValue::Int(i), line)?;
                    match self.exec_block(frame, body)? {
                        Flow::Break => break,
                        Flow::Return(v) => return Ok(Flow::Return(v)),
                        Flow::Next | Flow::Continue => {}
                    }
                    i = match i.checked_add(step) {
                        Some(n) => n,
                        None => break,
                    };
                }
                return Ok(Flow::Next);
            }
        }
        let coll = self.eval(frame, iter)?;
        let items = self.iter_items(&coll, line)?;
        for item in items.iter() {
            self.tick(1)?;
            self.bind(frame, targets, item.clone(), line)?;
            match self.exec_block(frame, body)? {
                Flow::Break => break,
                Flow::Return(v) => return Ok(Flow::Return(v)),
                Flow::Next | Flow::Continue => {}
            }
        }
        Ok(Flow::Next)
    }

    fn bind(&mut self, frame: &mut Frame, targets: &[String], v: DslValue, line: usize) -> R<()> {
        if targets.len() == 1 {
            frame.insert(targets[0].clone(), v);
        } else {
            let items = self.unpack(&v, targets.len(), line)?;
            for (n, v) in targets.iter().zip(items) {
                frame.insert(n.clone(), v);
            }
        }
        Ok(())
    }

    fn unpack(&self, v: &DslValue, n: usize, line: usize) -> R<Vec<DslValue>> {
        match v {
            DslValue::List(items) if items.len() == n => Ok(items.to_vec()),
            DslValue::List(items) => Err(fault(
                FaultKind::ValueError,
                line,
                format!("cannot unpack {} values into {n} names", items.len()),
            )),
            other => Err(fault(
                FaultKind::TypeMismatch,
                line,
                format!("cannot unpack a {} value", other.type_name()),
            )),
        }
    }

    /// Snapshot of the elements a `for` loop or comprehension visits.
    pub fn iter_items(&mut self, v: &DslValue, line: usize) -> R<Rc<Vec<DslValue>>> {
        match v {
            DslValue::List(items) => Ok(items.clone()),
            DslValue::Map(m) => {
                self.tick(m.len() as u64)?;
                Ok(Rc::new(m.keys().map(|k| DslValue::str(k)).collect()))
            }
            DslValue::Str(s) => {
                self.tick(s.len() as u64)?;
                Ok(Rc::new(s.chars().map(|c| DslValue::str(&c.to_string())).collect()))
            }
            other => Err(fault(
                FaultKind::TypeMismatch,
                line,
                format!("{} is not iterable", other.type_name()),
            )),
        }
    }

    fn eval_keys(&mut self, frame: &mut Frame, path: &[Expr]) -> R<Vec<DslValue>> {
        path.iter().map(|e| self.eval(frame, e)).collect()
    }

    fn lookup(&self, frame: &Frame, name: &str, line: usize) -> R<DslValue> {
        if let Some(v) = frame.get(name).or_else(|| self.globals.get(name)) {
            return Ok(v.clone());
        }
        builtins::constant(name)
            .ok_or_else(|| fault(FaultKind::UndefinedName, line, format!("name `{name}` is not defined")))
    }

    fn read_place(&mut self, frame: &mut Frame, root: &str, keys: &[DslValue], line: usize) -> R<DslValue> {
        let mut v = self.lookup(frame, root, line)?;
        for k in keys {
            v = self.index(&v, k, line)?;
        }
        Ok(v)
    }

    /// Mutable reference to `root[keys...]`, copying shared storage on write.
    fn place_mut<'f>(
        &mut self,
        frame: &'f mut Frame,
        root: &str,
        keys: &[DslValue],
        line: usize,
    ) -> R<&'f mut DslValue> {
        if !frame.contains_key(root) {
            let v = self.lookup(frame, root, line)?;
            frame.insert(root.to_string(), v);
        }
        let mut cur = frame.get_mut(root).expect("inserted above");
        for k in keys {
            self.tick(1)?;
            cur = match cur {
                DslValue::List(items) => {
                    let i = list_index(k, items.len(), line)?;
                    &mut Rc::make_mut(items)[i]
                }
                DslValue::Map(m) => {
                    let key = map_key(k, line)?;
                    Rc::make_mut(m)
                        .get_mut(key)
                        .ok_or_else(|| fault(FaultKind::MissingKey, line, format!("key '{key}' not found")))?
                }
                other => {
                    return Err(fault(
                        FaultKind::TypeMismatch,
                        line,
                        format!("{} is not subscriptable", other.type_name()),
                    ))
                }
            };
        }
        Ok(cur)
    }

    fn write_place(&mut self, frame: &mut Frame, root: &str, keys: &[DslValue], v: DslValue, line: usize) -> R<()> {
        let Some((last, parents)) = keys.split_last() else {
            frame.insert(root.to_string(), v);
            return Ok(());
        };
        let max = self.limits.max_collection_len;
        let container = self.place_mut(frame, root, parents, line)?;
        match container {
            DslValue::List(items) => {
                let i = list_index(last, items.len(), line)?;
                Rc::make_mut(items)[i] = v;
            }
            DslValue::Map(m) => {
                let key = map_key(last, line)?.to_string();
                if !m.contains_key(&key) && m.len() >= max {
                    return Err(EvalError::MemoryLimit {
                        limit: max,
                        requested: m.len() + 1,
                    });
                }
                Rc::make_mut(m).insert(key, v);
            }
            other => {
                return Err(fault(
                    FaultKind::TypeMismatch,
                    line,
                    format!("{} does not support item assignment", other.type_name()),
                ))
            }
        }
        Ok(())
    }

    fn assign(&mut self, frame: &mut Frame, p: &Place, v: DslValue, line: usize) -> R<()> {
        let keys = self.eval_keys(frame, &p.path)?;
        self.write_place(frame, &p.root, &keys, v, line)
    }

    pub fn index(&mut self, base: &DslValue, key: &DslValue, line: usize) -> R<DslValue> {
        match base {
            DslValue::List(items) => Ok(items[list_index(key, items.len(), line)?].clone()),
            DslValue::Map(m) => {
                let k = map_key(key, line)?;
                m.get(k)
                    .cloned()
                    .ok_or_else(|| fault(FaultKind::MissingKey, line, format!("key '{k}' not found")))
            }
            DslValue::Str(s) => {
                let chars: Vec<char> = s.chars().collect();
                let i = list_index(key, chars.len(), line)?;
                Ok(DslValue::str(&chars[i].to_string()))
            }
            other => Err(fault(
                FaultKind::TypeMismatch,
                line,
                format!("{} is not subscriptable", other.type_name()),
            )),
        }
    }

    pub fn eval(&mut self, frame: &mut Frame, e: &Expr) -> R<DslValue> {
        self.tick(1)?;
        let line = e.line;
        Ok(match &e.kind {
            ExprKind::None => DslValue::None,
            ExprKind::Bool(b) => DslValue::Bool(*b),
            ExprKind::Int(i) => DslValue::Int(*i),
            ExprKind::Str(s) => DslValue::str(s),
            ExprKind::FStr(parts) => {
                let mut out = String::new();
                for p in parts {
                    match p {
                        FPart::Lit(s) => out.push_str(s),
                        FPart::Expr(x) => {
                            let v = self.eval(frame, x)?;
                            out.push_str(&self.render(&v)?);
                        }
                    }
                    self.check_len(out.len())?;
                }
                DslValue::str(&out)
            }
            ExprKind::Name(n) => self.lookup(frame, n, line)?,
            ExprKind::List(items) => {
                let vals = items.iter().map(|x| self.eval(frame, x)).collect::<R<Vec<_>>>()?;
                DslValue::list(vals)
            }
            ExprKind::Map(pairs) => {
                let mut m = BTreeMap::new();
                for (k, v) in pairs {
                    let k = self.eval(frame, k)?;
                    let k = map_key(&k, line)?.to_string();
                    let v = self.eval(frame, v)?;
                    m.insert(k, v);
                }
                DslValue::map(m)
            }
            ExprKind::Neg(x) => match self.eval(frame, x)? {
                DslValue::Int(i) => DslValue::Int(
                    i.checked_neg()
                        .ok_or_else(|| fault(FaultKind::Overflow, line, "integer overflow"))?,
                ),
                other => {
                    return Err(fault(
                        FaultKind::TypeMismatch,
                        line,
                        format!("cannot negate {}", other.type_name()),
                    ))
                }
            },
            ExprKind::Not(x) => DslValue::Bool(!self.eval(frame, x)?.truthy()),
            ExprKind::And(a, b) => {
                let l = self.eval(frame, a)?;
                if !l.truthy() {
                    l
                } else {
                    self.eval(frame, b)?
                }
            }
            ExprKind::Or(a, b) => {
                let l = self.eval(frame, a)?;
                if l.truthy() {
                    l
                } else {
                    self.eval(frame, b)?
                }
            }
            ExprKind::Ternary(c, a, b) => {
                if self.eval(frame, c)?.truthy() {
                    self.eval(frame, a)?
                } else {
                    self.eval(frame, b)?
                }
            }
            ExprKind::Bin(op, a, b) => {
                let l = self.eval(frame, a)?;
                let r = self.eval(frame, b)?;
                self.binop(*op, l, r, line)?
            }
            ExprKind::Cmp(first, rest) => {
                let mut l = self.eval(frame, first)?;
                for (op, x) in rest {
                    let r = self.eval(frame, x)?;
                    if !self.compare(*op, &l, &r, line)? {
                        return Ok(DslValue::Bool(false));
                    }
                    l = r;
                }
                DslValue::Bool(true)
            }
            ExprKind::Index(base, key) => {
                let b = self.eval(frame, base)?;
                let k = self.eval(frame, key)?;
                self.index(&b, &k, line)?
            }
            ExprKind::Slice(base, lo, hi) => {
                let b = self.eval(frame, base)?;
                let lo = lo.as_ref().map(|x| self.eval(frame, x)).transpose()?;
                let hi = hi.as_ref().map(|x| self.eval(frame, x)).transpose()?;
                self.slice(&b, lo, hi, line)?
            }
            ExprKind::Call(name, args) => {
                let vals = args.iter().map(|x| self.eval(frame, x)).collect::<R<Vec<_>>>()?;
                if self.module.function(name).is_some() {
                    self.call_user(name, vals, line)?
                } else {
                    builtins::call(self, name, vals, line)?
                }
            }
            ExprKind::Method(recv, name, args) => {
                if let ExprKind::Name(m) = &recv.kind {
                    if m == "copy" && !frame.contains_key("copy") && self.module.imports.iter().any(|i| i == "copy") {
                        let vals = args.iter().map(|x| self.eval(frame, x)).collect::<R<Vec<_>>>()?;
                        return match (name.as_str(), vals.as_slice()) {
                            ("deepcopy" | "copy", [v]) => Ok(v.clone()),
                            _ => Err(fault(
                                FaultKind::UndefinedName,
                                line,
                                format!("copy has no function `{name}`"),
                            )),
                        };
                    }
                }
                let vals = args.iter().map(|x| self.eval(frame, x)).collect::<R<Vec<_>>>()?;
                if builtins::is_mutating_method(name) {
                    if let Some(place) = recv.as_place() {
                        let keys = self.eval_keys(frame, &place.path)?;
                        let max = self.limits.max_collection_len;
                        let mut target =
                            std::mem::replace(self.place_mut(frame, &place.root, &keys, line)?, DslValue::None);
                        let out = builtins::mutate(self, &mut target, name, vals, line, max);
                        *self.place_mut(frame, &place.root, &keys, line)? = target;
                        return out;
                    }
                    let mut tmp = self.eval(frame, recv)?;
                    let max = self.limits.max_collection_len;
                    return builtins::mutate(self, &mut tmp, name, vals, line, max);
                }
                let r = self.eval(frame, recv)?;
                builtins::method(self, &r, name, vals, line)?
            }
            ExprKind::ListComp {
                elem,
                targets,
                iter,
                cond,
            } => {
                let coll = self.eval(frame, iter)?;
                let items = self.iter_items(&coll, line)?;
                // comprehension variables live in their own scope
                let saved: Vec<(String, Option<DslValue>)> =
                    targets.iter().map(|t| (t.clone(), frame.get(t).cloned())).collect();
                let mut out = Vec::new();
                let mut result = Ok(());
                for item in items.iter() {
                    let step = (|| -> R<()> {
                        self.tick(1)?;
                        self.bind(frame, targets, item.clone(), line)?;
                        if let Some(c) = cond {
                            if !self.eval(frame, c)?.truthy() {
                                return Ok(());
                            }
                        }
                        let v = self.eval(frame, elem)?;
                        self.check_len(out.len() + 1)?;
                        out.push(v);
                        Ok(())
                    })();
                    if let Err(e) = step {
                        result = Err(e);
                        break;
                    }
                }
                for (name, old) in saved {
                    match old {
                        Some(v) => frame.insert(name, v),
                        None => frame.remove(&name),
                    };
                }
                result?;
                DslValue::list(out)
            }
        })
    }

    fn slice(&mut self, b: &DslValue, lo: Option<DslValue>, hi: Option<DslValue>, line: usize) -> R<DslValue> {
        let len = match b {
            DslValue::List(l) => l.len(),
            DslValue::Str(s) => s.chars().count(),
            other => {
                return Err(fault(
                    FaultKind::TypeMismatch,
                    line,
                    format!("cannot slice {}", other.type_name()),
                ))
            }
        } as i64;
        let bound = |v: Option<DslValue>, default: i64| -> R<i64> {
            match v {
                None | Some(DslValue::None) => Ok(default),
                Some(DslValue::Int(i)) => Ok(if i < 0 { (len + i).max(0) } else { i.min(len) }),
                Some(other) => Err(fault(
                    FaultKind::TypeMismatch,
                    line,
                    format!("slice bound must be int, got {}", other.type_name()),
                )),
            }
        };
        let lo = bound(lo, 0)? as usize;
        let hi = (bound(hi, len)? as usize).max(lo);
        self.tick((hi - lo) as u64)?;
        Ok(match b {
            DslValue::List(l) => DslValue::list(l[lo..hi].to_vec()),
            DslValue::Str(s) => DslValue::str(&s.chars().skip(lo).take(hi - lo).collect::<String>()),
            _ => unreachable!(),
        })
    }

    pub fn compare(&mut self, op: CmpOp, l: &DslValue, r: &DslValue, line: usize) -> R<bool> {
        Ok(match op {
            CmpOp::Eq | CmpOp::Is => self.eq(l, r)?,
            CmpOp::Ne | CmpOp::IsNot => !self.eq(l, r)?,
            CmpOp::Lt => self.cmp(l, r, line)? == Ordering::Less,
            CmpOp::Le => self.cmp(l, r, line)? != Ordering::Greater,
            CmpOp::Gt => self.cmp(l, r, line)? == Ordering::Greater,
            CmpOp::Ge => self.cmp(l, r, line)? != Ordering::Less,
            CmpOp::In => self.contains(r, l, line)?,
            CmpOp::NotIn => !self.contains(r, l, line)?,
        })
    }

    pub fn contains(&mut self, coll: &DslValue, x: &DslValue, line: usize) -> R<bool> {
        match coll {
            DslValue::List(items) => {
                for i in items.iter() {
                    if self.eq(i, x)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            DslValue::Map(m) => match x {
                DslValue::Str(k) => Ok(m.contains_key(&**k)),
                _ => Ok(false),
            },
            DslValue::Str(s) => match x {
                DslValue::Str(sub) => {
                    self.tick(s.len() as u64 / 8 + 1)?;
                    Ok(s.contains(&**sub))
                }
                other => Err(fault(
                    FaultKind::TypeMismatch,
                    line,
                    format!("`in <str>` needs a str, got {}", other.type_name()),
                )),
            },
            DslValue::None => Err(fault(
                FaultKind::TypeMismatch,
                line,
                "argument of type none is not iterable",
            )),
            other => Err(fault(
                FaultKind::TypeMismatch,
                line,
                format!("argument of type {} is not iterable", other.type_name()),
            )),
        }
    }

    pub fn binop(&mut self, op: BinOp, l: DslValue, r: DslValue, line: usize) -> R<DslValue> {
        use DslValue::*;
        let overflow = || fault(FaultKind::Overflow, line, "integer overflow");
        let mismatch = |l: &DslValue, r: &DslValue| {
            fault(
                FaultKind::TypeMismatch,
                line,
                format!(
                    "unsupported operand types for {op:?}: {} and {}",
                    l.type_name(),
                    r.type_name()
                ),
            )
        };
        let as_int = |v: &DslValue| match v {
            Int(i) => Some(*i),
            Bool(b) => Some(*b as i64),
            _ => Option::None,
        };
        if let (Some(a), Some(b)) = (as_int(&l), as_int(&r)) {
            return Ok(Int(match op {
                BinOp::Add => a.checked_add(b).ok_or_else(overflow)?,
                BinOp::Sub => a.checked_sub(b).ok_or_else(overflow)?,
                BinOp::Mul => a.checked_mul(b).ok_or_else(overflow)?,
                BinOp::FloorDiv | BinOp::Mod => {
                    if b == 0 {
                        return Err(fault(FaultKind::DivisionByZero, line, "division by zero"));
                    }
                    let mut q = a.checked_div(b).ok_or_else(overflow)?;
                    let mut m = a % b;
                    // Python floors toward negative infinity
                    if m != 0 && (m < 0) != (b < 0) {
                        q -= 1;
                        m += b;
                    }
                    if op == BinOp::FloorDiv {
                        q
                    } else {
                        m
                    }
                }
                BinOp::Pow => {
                    if b < 0 {
                        return Err(fault(
                            FaultKind::ValueError,
                            line,
                            "negative exponents are not supported",
                        ));
                    }
                    let e = u32::try_from(b).map_err(|_| overflow())?;
                    a.checked_pow(e).ok_or_else(overflow)?
                }
            }));
        }
        match (op, &l, &r) {
            (BinOp::Add, Str(a), Str(b)) => {
                self.check_len(a.len() + b.len())?;
                self.tick((a.len() + b.len()) as u64 / 8 + 1)?;
                Ok(DslValue::str(&format!("{a}{b}")))
            }
            (BinOp::Add, List(a), List(b)) => {
                self.check_len(a.len() + b.len())?;
                self.tick((a.len() + b.len()) as u64)?;
                let mut v = a.to_vec();
                v.extend(b.iter().cloned());
                Ok(DslValue::list(v))
            }
            (BinOp::Mul, List(_) | Str(_), Int(_)) | (BinOp::Mul, Int(_), List(_) | Str(_)) => {
                let (seq, n) = match (&l, &r) {
                    (Int(n), s) | (s, Int(n)) => (s, (*n).max(0) as u64),
                    _ => unreachable!(),
                };
                let total = (seq.weight() as u64).saturating_mul(n);
                self.check_len(usize::try_from(total).unwrap_or(usize::MAX))?;
                self.tick(total)?;
                Ok(match seq {
                    Str(s) => DslValue::str(&s.repeat(n as usize)),
                    List(items) => {
                        let mut v = Vec::with_capacity(total as usize);
                        for _ in 0..n {
                            v.extend(items.iter().cloned());
                        }
                        DslValue::list(v)
                    }
                    _ => unreachable!(),
                })
            }
            _ => Err(mismatch(&l, &r)),
        }
    }
}

pub(crate) fn list_index(k: &DslValue, len: usize, line: usize) -> R<usize> {
    let i = match k {
        DslValue::Int(i) => *i,
        DslValue::Bool(b) => *b as i64,
        other => {
            return Err(fault(
                FaultKind::TypeMismatch,
                line,
                format!("list indices must be int, got {}", other.type_name()),
            ))
        }
    };
    let idx = if i < 0 { len as i64 + i } else { i };
    if idx < 0 || idx >= len as i64 {
        return Err(fault(
            FaultKind::IndexOutOfRange,
            line,
            format!("index {i} out of range for length {len}"),
        ));
    }
    Ok(idx as usize)
}

pub(crate) fn map_key(k: &DslValue, line: usize) -> R<&str> {
    match k {
        DslValue::Str(s) => Ok(s),
        other => Err(fault(
            FaultKind::TypeMismatch,
            line,
            format!("map keys must be str, got {}", other.type_name()),
        )),
    }
}

fn delete_key(container: &mut DslValue, key: &DslValue, line: usize) -> R<()> {
    match container {
        DslValue::List(items) => {
            let i = list_index(key, items.len(), line)?;
            Rc::make_mut(items).remove(i);
            Ok(())
        }
        DslValue::Map(m) => {
            let k = map_key(key, line)?;
            if Rc::make_mut(m).remove(k).is_none() {
                return Err(fault(FaultKind::MissingKey, line, format!("key '{k}' not found")));
            }
            Ok(())
        }
        other => Err(fault(
            FaultKind::TypeMismatch,
            line,
            format!("cannot delete from {}", other.type_name()),
        )),
    }
}

fn eq_fuel(a: &DslValue, b: &DslValue, fuel: &mut u64) -> Option<bool> {
    *fuel = fuel.checked_sub(1)?;
    Some(match (a, b) {
        (DslValue::List(x), DslValue::List(y)) => {
            if Rc::ptr_eq(x, y) {
                return Some(true);
            }
            if x.len() != y.len() {
                return Some(false);
            }
            for (p, q) in x.iter().zip(y.iter()) {
                if !eq_fuel(p, q, fuel)? {
                    return Some(false);
                }
            }
            true
        }
        (DslValue::Map(x), DslValue::Map(y)) => {
            if Rc::ptr_eq(x, y) {
                return Some(true);
            }
            if x.len() != y.len() {
                return Some(false);
            }
            for ((k1, v1), (k2, v2)) in x.iter().zip(y.iter()) {
                if k1 != k2 || !eq_fuel(v1, v2, fuel)? {
                    return Some(false);
                }
            }
            true
        }
        (DslValue::Int(x), DslValue::Bool(y)) | (DslValue::Bool(y), DslValue::Int(x)) => *x == *y as i64,
        _ => a == b,
    })
}

fn cmp_fuel(a: &DslValue, b: &DslValue, fuel: &mut u64) -> Result<Option<Ordering>, ()> {
    *fuel = fuel.checked_sub(1).ok_or(())?;
    match (a, b) {
        (DslValue::List(x), DslValue::List(y)) => {
            for (p, q) in x.iter().zip(y.iter()) {
                match cmp_fuel(p, q, fuel)? {
                    Some(Ordering::Equal) => continue,
                    other => return Ok(other),
                }
            }
            Ok(Some(x.len().cmp(&y.len())))
        }
        _ => Ok(a.compare(b)),
    }
}

struct Bounded {
    buf: String,
    limit: usize,
}

impl std::fmt::Write for Bounded {
    fn write_str(&mut self, s: &str) -> std::fmt::Result {
        if self.buf.len() + s.len() > self.limit {
            return Err(std::fmt::Error);
        }
        self.buf.push_str(s);
        Ok(())
    }
}
