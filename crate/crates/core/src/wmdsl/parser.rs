use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::{ParseError, SandboxChannel};

const MAX_DEPTH: usize = 100;

pub fn parse_module(src: &str) -> Result<Module, ParseError> {
    let tokens = tokenize(src)?;
    let mut p = Parser {
        toks: tokens,
        at: 0,
        depth: 0,
        hoisted: Vec::new(),
    };
    p.module()
}

struct Parser {
    toks: Vec<Token>,
    at: usize,
    depth: usize,
    hoisted: Vec<FuncDef>,
}

fn sandbox(line: usize, col: usize, channel: SandboxChannel, detail: impl Into<String>) -> ParseError {
    ParseError::SandboxViolation {
        line,
        col,
        channel,
        detail: detail.into(),
    }
}

/// Keywords rejected by the sandbox wherever they appear.
fn forbidden_keyword(word: &str) -> Option<SandboxChannel> {
    Some(match word {
        "while" => SandboxChannel::UnboundedLoop,
        "import" => SandboxChannel::Import,
        "lambda" => SandboxChannel::HigherOrder,
        "class" | "global" | "nonlocal" | "try" | "except" | "finally" | "with" | "yield" | "async" | "await"
        | "raise" | "assert" => SandboxChannel::Construct,
        _ => return None,
    })
}

const KEYWORDS: &[&str] = &[
    "def", "if", "elif", "else", "for", "in", "not", "and", "or", "is", "return", "break", "continue", "pass", "del",
    "from",
];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.at + k).min(self.toks.len() - 1)].tok
    }

    fn pos(&self) -> (usize, usize) {
        let t = &self.toks[self.at];
        (t.line, t.col)
    }

    fn line(&self) -> usize {
        self.toks[self.at].line
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.at].tok.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        let (line, col) = self.pos();
        ParseError::Syntax {
            line,
            col,
            message: message.into(),
        }
    }

    fn is_op(&self, op: &str) -> bool {
        matches!(self.peek(), Tok::Op(o) if *o == op)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Name(n) if n == kw)
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.is_op(op) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: &str) -> Result<(), ParseError> {
        if self.eat_op(op) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{op}`, found {}", describe(self.peek()))))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{kw}`, found {}", describe(self.peek()))))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        self.check_forbidden_kw()?;
        match self.peek().clone() {
            Tok::Name(n) if !KEYWORDS.contains(&n.as_str()) && !is_literal_name(&n) => {
                self.advance();
                Ok(n)
            }
            other => Err(self.err(format!("expected identifier, found {}", describe(&other)))),
        }
    }

    fn check_forbidden_kw(&self) -> Result<(), ParseError> {
        if let Tok::Name(n) = self.peek() {
            if let Some(ch) = forbidden_keyword(n) {
                let (line, col) = self.pos();
                return Err(sandbox(line, col, ch, format!("`{n}` is not allowed")));
            }
        }
        Ok(())
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.err("nesting too deep"));
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    fn module(&mut self) -> Result<Module, ParseError> {
        let mut functions = Vec::new();
        let mut globals = Vec::new();
        let mut imports = Vec::new();
        loop {
            match self.peek() {
                Tok::Eof => break,
                Tok::Newline => {
                    self.advance();
                }
                Tok::Indent => return Err(self.err("unexpected indentation")),
                Tok::Name(n) if n == "def" => functions.push(self.funcdef()?),
                Tok::Name(n) if n == "from" => imports.extend(self.parse_from_import()?),
                // `import copy` is tolerated so `copy.deepcopy(x)` keeps working
                Tok::Name(n) if n == "import" && matches!(self.peek_at(1), Tok::Name(m) if m == "copy") => {
                    self.advance();
                    self.advance();
                    self.end_of_line()?;
                    imports.push("copy".into());
                }
                _ => {
                    let line = self.line();
                    let stmts = self.simple_line()?;
                    for s in stmts {
                        match &s.kind {
                            // docstrings and stray literals
                            StmtKind::Expr(_) | StmtKind::Pass => {}
                            StmtKind::Assign(..) => globals.push(s),
                            _ => {
                                return Err(ParseError::Syntax {
                                    line,
                                    col: 1,
                                    message: "only definitions, imports and assignments are allowed at top level"
                                        .into(),
                                })
                            }
                        }
                    }
                }
            }
        }
        functions.append(&mut self.hoisted);
        let mut seen = std::collections::BTreeSet::new();
        for f in &functions {
            if !seen.insert(f.name.clone()) {
                return Err(ParseError::Syntax {
                    line: f.line,
                    col: 1,
                    message: format!("function `{}` defined twice", f.name),
                });
            }
        }
        Ok(Module {
            functions,
            globals,
            imports,
        })
    }

    fn parse_from_import(&mut self) -> Result<Vec<String>, ParseError> {
        let (line, col) = self.pos();
        self.expect_kw("from")?;
        let module = match self.advance() {
            Tok::Name(n) => n,
            other => return Err(self.err(format!("expected module name, found {}", describe(&other)))),
        };
        if module != "utils" {
            return Err(sandbox(
                line,
                col,
                SandboxChannel::Import,
                format!("import from `{module}` is not allowed; only `utils` is available"),
            ));
        }
        self.expect_kw_raw("import")?;
        let mut names = vec![self.ident()?];
        while self.eat_op(",") {
            names.push(self.ident()?);
        }
        self.end_of_line()?;
        Ok(names)
    }

    /// `import` is normally a sandbox keyword; inside `from utils import` it is syntax.
    fn expect_kw_raw(&mut self, kw: &str) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Name(n) if n == kw => {
                self.advance();
                Ok(())
            }
            other => Err(self.err(format!("expected `{kw}`, found {}", describe(other)))),
        }
    }

    fn end_of_line(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Newline => {
                self.advance();
                Ok(())
            }
            Tok::Eof | Tok::Dedent => Ok(()),
            other => Err(self.err(format!("expected end of line, found {}", describe(other)))),
        }
    }

    fn funcdef(&mut self) -> Result<FuncDef, ParseError> {
        let line = self.line();
        self.expect_kw("def")?;
        let name = self.ident()?;
        self.expect_op("(")?;
        let mut params = Vec::new();
        while !self.is_op(")") {
            let p = self.ident()?;
            if self.eat_op(":") {
                self.expr()?; // annotation, ignored
            }
            if self.is_op("=") {
                return Err(self.err("default parameter values are not supported"));
            }
            if params.contains(&p) {
                return Err(self.err(format!("duplicate parameter `{p}`")));
            }
            params.push(p);
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        if self.eat_op("->") {
            self.expr()?;
        }
        let body = self.block()?;
        Ok(FuncDef {
            name,
            params,
            body,
            line,
        })
    }

    fn block(&mut self) -> Result<Vec<Stmt>, ParseError> {
        self.enter()?;
        self.expect_op(":")?;
        let body = if matches!(self.peek(), Tok::Newline) {
            self.advance();
            if !matches!(self.peek(), Tok::Indent) {
                return Err(self.err("expected an indented block"));
            }
            self.advance();
            let mut body = Vec::new();
            while !matches!(self.peek(), Tok::Dedent | Tok::Eof) {
                body.extend(self.statement()?);
            }
            if matches!(self.peek(), Tok::Dedent) {
                self.advance();
            }
            body
        } else {
            self.simple_line()?
        };
        self.leave();
        Ok(body)
    }

    fn statement(&mut self) -> Result<Vec<Stmt>, ParseError> {
        self.check_forbidden_kw()?;
        let line = self.line();
        let kind = match self.peek() {
            Tok::Name(n) if n == "def" => {
                let f = self.funcdef()?;
                self.hoisted.push(f);
                StmtKind::Pass
            }
            Tok::Name(n) if n == "if" => self.if_stmt()?,
            Tok::Name(n) if n == "for" => {
                self.advance();
                let targets = self.for_targets()?;
                self.expect_kw("in")?;
                let iter = self.expr_list()?;
                let body = self.block()?;
                StmtKind::For(targets, iter, body)
            }
            Tok::Name(n) if n == "from" => {
                let (line, col) = self.pos();
                return Err(sandbox(
                    line,
                    col,
                    SandboxChannel::Import,
                    "imports are only allowed at top level",
                ));
            }
            _ => return self.simple_line(),
        };
        Ok(vec![Stmt { kind, line }])
    }

    fn for_targets(&mut self) -> Result<Vec<String>, ParseError> {
        let paren = self.eat_op("(");
        let mut targets = vec![self.ident()?];
        while self.eat_op(",") {
            if self.is_kw("in") || self.is_op(")") {
                break;
            }
            targets.push(self.ident()?);
        }
        if paren {
            self.expect_op(")")?;
        }
        Ok(targets)
    }

    fn if_stmt(&mut self) -> Result<StmtKind, ParseError> {
        self.expect_kw("if")?;
        let mut arms = Vec::new();
        let cond = self.expr()?;
        arms.push((cond, self.block()?));
        let mut otherwise = Vec::new();
        loop {
            if self.eat_kw("elif") {
                let cond = self.expr()?;
                arms.push((cond, self.block()?));
            } else if self.eat_kw("else") {
                otherwise = self.block()?;
                break;
            } else {
                break;
            }
        }
        Ok(StmtKind::If(arms, otherwise))
    }

    /// One or more `;`-separated simple statements followed by end of line.
    fn simple_line(&mut self) -> Result<Vec<Stmt>, ParseError> {
        let mut out = vec![self.simple_stmt()?];
        while self.eat_op(";") {
            if matches!(self.peek(), Tok::Newline | Tok::Eof) {
                break;
            }
            out.push(self.simple_stmt()?);
        }
        self.end_of_line()?;
        Ok(out)
    }

    fn simple_stmt(&mut self) -> Result<Stmt, ParseError> {
        self.check_forbidden_kw()?;
        let line = self.line();
        let kind = match self.peek() {
            Tok::Name(n) if n == "return" => {
                self.advance();
                if matches!(self.peek(), Tok::Newline | Tok::Eof | Tok::Dedent) || self.is_op(";") {
                    StmtKind::Return(None)
                } else {
                    StmtKind::Return(Some(self.expr_list()?))
                }
            }
            Tok::Name(n) if n == "break" => {
                self.advance();
                StmtKind::Break
            }
            Tok::Name(n) if n == "continue" => {
                self.advance();
                StmtKind::Continue
            }
            Tok::Name(n) if n == "pass" => {
                self.advance();
                StmtKind::Pass
            }
            Tok::Name(n) if n == "del" => {
                self.advance();
                let e = self.expr()?;
                let place = e
                    .as_place()
                    .ok_or_else(|| self.err("`del` needs a name or subscript"))?;
                StmtKind::Del(place)
            }
            Tok::Name(n) if matches!(n.as_str(), "def" | "if" | "for" | "elif" | "else") => {
                return Err(self.err(format!("`{n}` cannot appear here")))
            }
            _ => {
                let lhs = self.expr_list()?;
                if self.eat_op("=") {
                    let target = to_target(&lhs).ok_or_else(|| self.err("cannot assign to this expression"))?;
                    let rhs = self.expr_list()?;
                    if self.is_op("=") {
                        return Err(self.err("chained assignment is not supported"));
                    }
                    StmtKind::Assign(target, rhs)
                } else if let Some(op) = self.aug_op() {
                    let place = lhs
                        .as_place()
                        .ok_or_else(|| self.err("augmented assignment needs a name or subscript"))?;
                    let rhs = self.expr_list()?;
                    StmtKind::AugAssign(place, op, rhs)
                } else {
                    StmtKind::Expr(lhs)
                }
            }
        };
        Ok(Stmt { kind, line })
    }

    fn aug_op(&mut self) -> Option<BinOp> {
        let op = match self.peek() {
            Tok::Op("+=") => BinOp::Add,
            Tok::Op("-=") => BinOp::Sub,
            Tok::Op("*=") => BinOp::Mul,
            Tok::Op("//=") => BinOp::FloorDiv,
            Tok::Op("%=") => BinOp::Mod,
            Tok::Op("**=") => BinOp::Pow,
            _ => return None,
        };
        self.advance();
        Some(op)
    }

    /// `a, b, c` becomes a list literal; a single expression stays as is.
    fn expr_list(&mut self) -> Result<Expr, ParseError> {
        let line = self.line();
        let first = self.expr()?;
        if !self.is_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.ends_expr_list() {
                break;
            }
            items.push(self.expr()?);
        }
        Ok(Expr::new(ExprKind::List(items), line))
    }

    fn ends_expr_list(&self) -> bool {
        matches!(self.peek(), Tok::Newline | Tok::Eof | Tok::Dedent)
            || self.is_op("=")
            || self.is_op(")")
            || self.is_op(":")
            || self.is_op(";")
    }

    pub fn expr(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        self.check_forbidden_kw()?;
        let line = self.line();
        let value = self.or_expr()?;
        let out = if self.is_kw("if") {
            self.advance();
            let cond = self.or_expr()?;
            self.expect_kw("else")?;
            let other = self.expr()?;
            Expr::new(
                ExprKind::Ternary(Box::new(cond), Box::new(value), Box::new(other)),
                line,
            )
        } else {
            value
        };
        self.leave();
        Ok(out)
    }

    fn or_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.and_expr()?;
        while self.is_kw("or") {
            let line = self.line();
            self.advance();
            let rhs = self.and_expr()?;
            lhs = Expr::new(ExprKind::Or(Box::new(lhs), Box::new(rhs)), line);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.not_expr()?;
        while self.is_kw("and") {
            let line = self.line();
            self.advance();
            let rhs = self.not_expr()?;
            lhs = Expr::new(ExprKind::And(Box::new(lhs), Box::new(rhs)), line);
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> Result<Expr, ParseError> {
        if self.is_kw("not") {
            self.enter()?;
            let line = self.line();
            self.advance();
            let inner = self.not_expr()?;
            self.leave();
            return Ok(Expr::new(ExprKind::Not(Box::new(inner)), line));
        }
        self.comparison()
    }

    fn cmp_op(&mut self) -> Option<CmpOp> {
        let op = match self.peek() {
            Tok::Op("==") => CmpOp::Eq,
            Tok::Op("!=") => CmpOp::Ne,
            Tok::Op("<") => CmpOp::Lt,
            Tok::Op("<=") => CmpOp::Le,
            Tok::Op(">") => CmpOp::Gt,
            Tok::Op(">=") => CmpOp::Ge,
            Tok::Name(n) if n == "in" => CmpOp::In,
            Tok::Name(n) if n == "not" && matches!(self.peek_at(1), Tok::Name(m) if m == "in") => {
                self.advance();
                CmpOp::NotIn
            }
            Tok::Name(n) if n == "is" => {
                if matches!(self.peek_at(1), Tok::Name(m) if m == "not") {
                    self.advance();
                    CmpOp::IsNot
                } else {
                    CmpOp::Is
                }
            }
            _ => return None,
        };
        self.advance();
        Some(op)
    }

    fn comparison(&mut self) -> Result<Expr, ParseError> {
        let line = self.line();
        let first = self.arith()?;
        let mut rest = Vec::new();
        while let Some(op) = self.cmp_op() {
            rest.push((op, self.arith()?));
        }
        if rest.is_empty() {
            Ok(first)
        } else {
            Ok(Expr::new(ExprKind::Cmp(Box::new(first), rest), line))
        }
    }

    fn arith(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Op("+") => BinOp::Add,
                Tok::Op("-") => BinOp::Sub,
                _ => break,
            };
            let line = self.line();
            self.advance();
            let rhs = self.term()?;
            lhs = Expr::new(ExprKind::Bin(op, Box::new(lhs), Box::new(rhs)), line);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Op("*") => BinOp::Mul,
                Tok::Op("//") => BinOp::FloorDiv,
                Tok::Op("%") => BinOp::Mod,
                Tok::Op("/") => return Err(self.err("`/` is not supported (no floats); use `//`")),
                _ => break,
            };
            let line = self.line();
            self.advance();
            let rhs = self.factor()?;
            lhs = Expr::new(ExprKind::Bin(op, Box::new(lhs), Box::new(rhs)), line);
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let line = self.line();
        if self.eat_op("-") {
            self.enter()?;
            let inner = self.factor()?;
            self.leave();
            return Ok(match inner.kind {
                ExprKind::Int(v) => Expr::new(ExprKind::Int(-v), line),
                _ => Expr::new(ExprKind::Neg(Box::new(inner)), line),
            });
        }
        if self.eat_op("+") {
            self.enter()?;
            let inner = self.factor()?;
            self.leave();
            return Ok(inner);
        }
        let base = self.postfix()?;
        if self.eat_op("**") {
            self.enter()?;
            let exp = self.factor()?;
            self.leave();
            return Ok(Expr::new(
                ExprKind::Bin(BinOp::Pow, Box::new(base), Box::new(exp)),
                line,
            ));
        }
        Ok(base)
    }

    fn postfix(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.atom()?;
        loop {
            let line = self.line();
            if self.eat_op("[") {
                e = self.subscript(e, line)?;
            } else if self.is_op(".") {
                self.advance();
                let (aline, acol) = self.pos();
                let name = match self.advance() {
                    Tok::Name(n) => n,
                    other => return Err(self.err(format!("expected attribute name, found {}", describe(&other)))),
                };
                if name.starts_with('_') {
                    return Err(sandbox(
                        aline,
                        acol,
                        SandboxChannel::Reflection,
                        format!("attribute `{name}` is not accessible"),
                    ));
                }
                if !self.is_op("(") {
                    return Err(ParseError::Syntax {
                        line: aline,
                        col: acol,
                        message: format!("attribute access `.{name}` is only supported as a method call"),
                    });
                }
                self.advance();
                let args = self.call_args()?;
                e = Expr::new(ExprKind::Method(Box::new(e), name, args), line);
            } else if self.is_op("(") {
                return Err(self.err("only named functions can be called"));
            } else {
                break;
            }
        }
        Ok(e)
    }

    fn subscript(&mut self, base: Expr, line: usize) -> Result<Expr, ParseError> {
        let start = if self.is_op(":") { None } else { Some(self.expr_list()?) };
        if self.eat_op(":") {
            let end = if self.is_op("]") {
                None
            } else {
                Some(Box::new(self.expr()?))
            };
            if self.is_op(":") {
                return Err(self.err("slice steps are not supported"));
            }
            self.expect_op("]")?;
            return Ok(Expr::new(
                ExprKind::Slice(Box::new(base), start.map(Box::new), end),
                line,
            ));
        }
        self.expect_op("]")?;
        let key = start.ok_or_else(|| self.err("empty subscript"))?;
        Ok(Expr::new(ExprKind::Index(Box::new(base), Box::new(key)), line))
    }

    fn call_args(&mut self) -> Result<Vec<Expr>, ParseError> {
        self.enter()?;
        let mut args = Vec::new();
        while !self.is_op(")") {
            if matches!(self.peek(), Tok::Name(_)) && matches!(self.peek_at(1), Tok::Op("=")) {
                return Err(self.err("keyword arguments are not supported"));
            }
            if self.is_op("*") || self.is_op("**") {
                return Err(self.err("argument unpacking is not supported"));
            }
            let line = self.line();
            let arg = self.expr()?;
            if self.is_kw("for") {
                // generator argument: any(x for x in xs)
                let comp = self.comprehension(arg, line)?;
                args.push(comp);
                break;
            }
            args.push(arg);
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        self.leave();
        Ok(args)
    }

    fn comprehension(&mut self, elem: Expr, line: usize) -> Result<Expr, ParseError> {
        self.expect_kw("for")?;
        let targets = self.for_targets()?;
        self.expect_kw("in")?;
        let iter = self.or_expr()?;
        let cond = if self.eat_kw("if") {
            Some(Box::new(self.or_expr()?))
        } else {
            None
        };
        if self.is_kw("for") {
            return Err(self.err("nested comprehensions are not supported"));
        }
        Ok(Expr::new(
            ExprKind::ListComp {
                elem: Box::new(elem),
                targets,
                iter: Box::new(iter),
                cond,
            },
            line,
        ))
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        self.check_forbidden_kw()?;
        let (line, col) = self.pos();
        match self.advance() {
            Tok::Int(v) => Ok(Expr::new(ExprKind::Int(v), line)),
            Tok::Str(mut s) => {
                while let Tok::Str(more) = self.peek() {
                    s.push_str(more);
                    self.advance();
                }
                Ok(Expr::new(ExprKind::Str(s), line))
            }
            Tok::FStr(raw) => {
                let parts = parse_fstring(&raw, line, col)?;
                Ok(Expr::new(ExprKind::FStr(parts), line))
            }
            Tok::Name(n) => match n.as_str() {
                "None" | "none" => Ok(Expr::new(ExprKind::None, line)),
                "True" | "true" => Ok(Expr::new(ExprKind::Bool(true), line)),
                "False" | "false" => Ok(Expr::new(ExprKind::Bool(false), line)),
                kw if KEYWORDS.contains(&kw) => Err(ParseError::Syntax {
                    line,
                    col,
                    message: format!("unexpected keyword `{kw}`"),
                }),
                _ => {
                    if self.eat_op("(") {
                        let args = self.call_args()?;
                        Ok(Expr::new(ExprKind::Call(n, args), line))
                    } else {
                        Ok(Expr::new(ExprKind::Name(n), line))
                    }
                }
            },
            Tok::Op("(") => {
                self.enter()?;
                if self.eat_op(")") {
                    self.leave();
                    return Ok(Expr::new(ExprKind::List(Vec::new()), line));
                }
                let first = self.expr()?;
                let out = if self.is_kw("for") {
                    self.comprehension(first, line)?
                } else if self.is_op(",") {
                    let mut items = vec![first];
                    while self.eat_op(",") {
                        if self.is_op(")") {
                            break;
                        }
                        items.push(self.expr()?);
                    }
                    Expr::new(ExprKind::List(items), line)
                } else {
                    first
                };
                self.expect_op(")")?;
                self.leave();
                Ok(out)
            }
            Tok::Op("[") => {
                self.enter()?;
                let mut items = Vec::new();
                if !self.is_op("]") {
                    let first = self.expr()?;
                    if self.is_kw("for") {
                        let comp = self.comprehension(first, line)?;
                        self.expect_op("]")?;
                        self.leave();
                        return Ok(comp);
                    }
                    items.push(first);
                    while self.eat_op(",") {
                        if self.is_op("]") {
                            break;
                        }
                        items.push(self.expr()?);
                    }
                }
                self.expect_op("]")?;
                self.leave();
                Ok(Expr::new(ExprKind::List(items), line))
            }
            Tok::Op("{") => {
                self.enter()?;
                let mut pairs = Vec::new();
                while !self.is_op("}") {
                    let k = self.expr()?;
                    if !self.is_op(":") {
                        return Err(self.err("set literals are not supported; expected `key: value`"));
                    }
                    self.advance();
                    let v = self.expr()?;
                    if self.is_kw("for") {
                        return Err(self.err("dict comprehensions are not supported"));
                    }
                    pairs.push((k, v));
                    if !self.eat_op(",") {
                        break;
                    }
                }
                self.expect_op("}")?;
                self.leave();
                Ok(Expr::new(ExprKind::Map(pairs), line))
            }
            other => Err(ParseError::Syntax {
                line,
                col,
                message: format!("expected expression, found {}", describe(&other)),
            }),
        }
    }
}

fn is_literal_name(n: &str) -> bool {
    matches!(n, "None" | "none" | "True" | "true" | "False" | "false")
}

fn to_target(e: &Expr) -> Option<Target> {
    match &e.kind {
        ExprKind::List(items) if !items.is_empty() => items
            .iter()
            .map(|i| match &i.kind {
                ExprKind::Name(n) => Some(n.clone()),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(Target::Unpack),
        _ => e.as_place().map(Target::Place),
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Name(n) => format!("`{n}`"),
        Tok::Int(v) => format!("`{v}`"),
        Tok::Str(_) | Tok::FStr(_) => "string".into(),
        Tok::Op(o) => format!("`{o}`"),
        Tok::Newline => "end of line".into(),
        Tok::Indent => "indentation".into(),
        Tok::Dedent => "dedent".into(),
        Tok::Eof => "end of input".into(),
    }
}

fn parse_fstring(raw: &str, line: usize, col: usize) -> Result<Vec<FPart>, ParseError> {
    let mut parts = Vec::new();
    let mut lit = String::new();
    let chars: Vec<char> = raw.chars().collect();
    let mut i = 0;
    let bad = |m: &str| ParseError::Syntax {
        line,
        col,
        message: m.to_string(),
    };
    while i < chars.len() {
        match chars[i] {
            '{' if chars.get(i + 1) == Some(&'{') => {
                lit.push('{');
                i += 2;
            }
            '}' if chars.get(i + 1) == Some(&'}') => {
                lit.push('}');
                i += 2;
            }
            '{' => {
                let close = chars[i..]
                    .iter()
                    .position(|&c| c == '}')
                    .ok_or_else(|| bad("unclosed `{` in f-string"))?;
                let inner: String = chars[i + 1..i + close].iter().collect();
                if inner.contains(['{', ':', '!']) {
                    return Err(bad("format specifiers are not supported in f-strings"));
                }
                if !lit.is_empty() {
                    parts.push(FPart::Lit(std::mem::take(&mut lit)));
                }
                let toks = tokenize(&inner).map_err(|_| bad("malformed f-string expression"))?;
                let mut p = Parser {
                    toks: toks
                        .into_iter()
                        .map(|mut t| {
                            t.line = line;
                            t.col = col;
                            t
                        })
                        .collect(),
                    at: 0,
                    depth: 0,
                    hoisted: Vec::new(),
                };
                let e = p.expr()?;
                if !matches!(p.peek(), Tok::Newline | Tok::Eof) {
                    return Err(bad("malformed f-string expression"));
                }
                parts.push(FPart::Expr(e));
                i += close + 1;
            }
            '}' => return Err(bad("single `}` in f-string")),
            c => {
                lit.push(c);
                i += 1;
            }
        }
    }
    if !lit.is_empty() {
        parts.push(FPart::Lit(lit));
    }
    Ok(parts)
}
