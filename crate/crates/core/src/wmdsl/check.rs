//! Static checks run after parsing: sandbox names, call resolution and
//! recursion.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::builtins::{is_builtin, is_constant};
use super::{ParseError, SandboxChannel};

pub fn forbidden_name(name: &str) -> Option<SandboxChannel> {
    use SandboxChannel::*;
    Some(match name {
        "open" | "file" | "pathlib" | "io" | "shutil" | "glob" => Filesystem,
        "socket" | "requests" | "urllib" | "http" => Network,
        "time" | "datetime" | "clock" | "sleep" | "perf_counter" | "monotonic" => Clock,
        "os" | "sys" | "subprocess" | "exit" | "quit" => Process,
        "random" | "secrets" => Randomness,
        "print" | "input" => Io,
        "exec" | "eval" | "compile" | "globals" | "locals" | "vars" | "getattr" | "setattr" | "delattr" | "hasattr"
        | "breakpoint" | "memoryview" | "object" => Reflection,
        n if n.starts_with("__") => Reflection,
        _ => return None,
    })
}

pub fn check_module(m: &Module) -> Result<(), ParseError> {
    for name in &m.imports {
        if name != "copy" && !is_builtin(name) && !is_constant(name) {
            return Err(ParseError::Syntax {
                line: 1,
                col: 1,
                message: format!("`utils` has no member `{name}`"),
            });
        }
    }
    let user: BTreeSet<&str> = m.functions.iter().map(|f| f.name.as_str()).collect();
    let mut graph: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    let mut checker = Checker {
        user: &user,
        calls: BTreeSet::new(),
    };
    for s in &m.globals {
        checker.stmt(s)?;
    }
    for f in &m.functions {
        if let Some(ch) = forbidden_name(&f.name) {
            return Err(violation(f.line, ch, &f.name));
        }
        for p in &f.params {
            if let Some(ch) = forbidden_name(p) {
                return Err(violation(f.line, ch, p));
            }
        }
        checker.calls.clear();
        for s in &f.body {
            checker.stmt(s)?;
        }
        graph.insert(&f.name, std::mem::take(&mut checker.calls));
    }
    if let Some((name, line)) = find_cycle(m, &graph) {
        return Err(ParseError::SandboxViolation {
            line,
            col: 1,
            channel: SandboxChannel::Recursion,
            detail: format!("function `{name}` is recursive"),
        });
    }
    Ok(())
}

fn violation(line: usize, channel: SandboxChannel, name: &str) -> ParseError {
    ParseError::SandboxViolation {
        line,
        col: 1,
        channel,
        detail: format!("`{name}` is not available inside world models"),
    }
}

fn find_cycle(m: &Module, graph: &BTreeMap<&str, BTreeSet<String>>) -> Option<(String, usize)> {
    // iterative DFS with colours
    let mut colour: BTreeMap<&str, u8> = BTreeMap::new();
    for f in &m.functions {
        if colour.get(f.name.as_str()).copied().unwrap_or(0) != 0 {
            continue;
        }
        let mut stack: Vec<(&str, Vec<&str>)> = vec![(f.name.as_str(), succ(graph, &f.name))];
        colour.insert(&f.name, 1);
        while let Some((node, next)) = stack.last_mut() {
            if let Some(n) = next.pop() {
                match colour.get(n).copied().unwrap_or(0) {
                    0 => {
                        colour.insert(n, 1);
                        let s = succ(graph, n);
                        stack.push((n, s));
                    }
                    1 => {
                        let line = m.function(n).map(|f| f.line).unwrap_or(1);
                        return Some((n.to_string(), line));
                    }
                    _ => {}
                }
            } else {
                colour.insert(node, 2);
                stack.pop();
            }
        }
    }
    None
}

fn succ<'a>(graph: &'a BTreeMap<&str, BTreeSet<String>>, n: &str) -> Vec<&'a str> {
    graph
        .get(n)
        .map(|s| s.iter().map(|x| x.as_str()).collect())
        .unwrap_or_default()
}

struct Checker<'a> {
    user: &'a BTreeSet<&'a str>,
    calls: BTreeSet<String>,
}

impl Checker<'_> {
    fn stmts(&mut self, b: &[Stmt]) -> Result<(), ParseError> {
        b.iter().try_for_each(|s| self.stmt(s))
    }

    fn name(&self, n: &str, line: usize) -> Result<(), ParseError> {
        match forbidden_name(n) {
            Some(ch) => Err(violation(line, ch, n)),
            None => Ok(()),
        }
    }

    fn place(&mut self, p: &Place, line: usize) -> Result<(), ParseError> {
        self.name(&p.root, line)?;
        p.path.iter().try_for_each(|e| self.expr(e))
    }

    fn stmt(&mut self, s: &Stmt) -> Result<(), ParseError> {
        match &s.kind {
            StmtKind::Expr(e) => self.expr(e),
            StmtKind::Assign(t, e) => {
                match t {
                    Target::Place(p) => self.place(p, s.line)?,
                    Target::Unpack(ns) => ns.iter().try_for_each(|n| self.name(n, s.line))?,
                }
                self.expr(e)
            }
            StmtKind::AugAssign(p, _, e) => {
                self.place(p, s.line)?;
                self.expr(e)
            }
            StmtKind::If(arms, other) => {
                for (c, b) in arms {
                    self.expr(c)?;
                    self.stmts(b)?;
                }
                self.stmts(other)
            }
            StmtKind::For(ts, it, body) => {
                ts.iter().try_for_each(|n| self.name(n, s.line))?;
                self.expr(it)?;
                self.stmts(body)
            }
            StmtKind::Return(Some(e)) => self.expr(e),
            StmtKind::Del(p) => self.place(p, s.line),
            StmtKind::Return(None) | StmtKind::Break | StmtKind::Continue | StmtKind::Pass => Ok(()),
        }
    }

    fn expr(&mut self, e: &Expr) -> Result<(), ParseError> {
        match &e.kind {
            ExprKind::None | ExprKind::Bool(_) | ExprKind::Int(_) | ExprKind::Str(_) => Ok(()),
            ExprKind::Name(n) => self.name(n, e.line),
            ExprKind::FStr(parts) => parts.iter().try_for_each(|p| match p {
                FPart::Lit(_) => Ok(()),
                FPart::Expr(x) => self.expr(x),
            }),
            ExprKind::List(items) => items.iter().try_for_each(|x| self.expr(x)),
            ExprKind::Map(pairs) => pairs.iter().try_for_each(|(k, v)| {
                self.expr(k)?;
                self.expr(v)
            }),
            ExprKind::Neg(x) | ExprKind::Not(x) => self.expr(x),
            ExprKind::Bin(_, a, b) | ExprKind::And(a, b) | ExprKind::Or(a, b) | ExprKind::Index(a, b) => {
                self.expr(a)?;
                self.expr(b)
            }
            ExprKind::Cmp(a, rest) => {
                self.expr(a)?;
                rest.iter().try_for_each(|(_, x)| self.expr(x))
            }
            ExprKind::Ternary(c, a, b) => {
                self.expr(c)?;
                self.expr(a)?;
                self.expr(b)
            }
            ExprKind::Slice(a, lo, hi) => {
                self.expr(a)?;
                if let Some(lo) = lo {
                    self.expr(lo)?;
                }
                if let Some(hi) = hi {
                    self.expr(hi)?;
                }
                Ok(())
            }
            ExprKind::Call(name, args) => {
                self.name(name, e.line)?;
                if self.user.contains(name.as_str()) {
                    self.calls.insert(name.clone());
                } else if !is_builtin(name) {
                    return Err(ParseError::Syntax {
                        line: e.line,
                        col: 1,
                        message: format!("unknown function `{name}`"),
                    });
                }
                args.iter().try_for_each(|x| self.expr(x))
            }
            ExprKind::Method(recv, _, args) => {
                self.expr(recv)?;
                args.iter().try_for_each(|x| self.expr(x))
            }
            ExprKind::ListComp {
                elem,
                targets,
                iter,
                cond,
            } => {
                targets.iter().try_for_each(|n| self.name(n, e.line))?;
                self.expr(elem)?;
                self.expr(iter)?;
                if let Some(c) = cond {
                    self.expr(c)?;
                }
                Ok(())
            }
        }
    }
}
