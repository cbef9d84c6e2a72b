#[derive(Debug, Clone, PartialEq)]
pub struct Module {
    pub functions: Vec<FuncDef>,
    /// Top-level assignments, evaluated once per call before the entry runs.
    pub globals: Vec<Stmt>,
    /// Names brought in with `from utils import ...`.
    pub imports: Vec<String>,
}

impl Module {
    pub fn function(&self, name: &str) -> Option<&FuncDef> {
        self.functions.iter().find(|f| f.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuncDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Expr(Expr),
    Assign(Target, Expr),
    AugAssign(Place, BinOp, Expr),
    If(Vec<(Expr, Vec<Stmt>)>, Vec<Stmt>),
    For(Vec<String>, Expr, Vec<Stmt>),
    Return(Option<Expr>),
    Del(Place),
    Break,
    Continue,
    Pass,
}

/// Assignment destination: a place or a flat tuple of names.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Place(Place),
    Unpack(Vec<String>),
}

/// `root[k1][k2]...`; mutating methods and indexed assignment act on places.
#[derive(Debug, Clone, PartialEq)]
pub struct Place {
    pub root: String,
    pub path: Vec<Expr>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    FloorDiv,
    Mod,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    In,
    NotIn,
    Is,
    IsNot,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FPart {
    Lit(String),
    Expr(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    None,
    Bool(bool),
    Int(i64),
    Str(String),
    FStr(Vec<FPart>),
    Name(String),
    List(Vec<Expr>),
    Map(Vec<(Expr, Expr)>),
    Neg(Box<Expr>),
    Not(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Cmp(Box<Expr>, Vec<(CmpOp, Expr)>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Ternary(Box<Expr>, Box<Expr>, Box<Expr>),
    Index(Box<Expr>, Box<Expr>),
    Slice(Box<Expr>, Option<Box<Expr>>, Option<Box<Expr>>),
    Call(String, Vec<Expr>),
    Method(Box<Expr>, String, Vec<Expr>),
    ListComp {
        elem: Box<Expr>,
        targets: Vec<String>,
        iter: Box<Expr>,
        cond: Option<Box<Expr>>,
    },
}

impl Expr {
    pub fn new(kind: ExprKind, line: usize) -> Self {
        Expr { kind, line }
    }

    /// The place this expression denotes, when it is a name followed by
    /// zero or more subscripts.
    pub fn as_place(&self) -> Option<Place> {
        match &self.kind {
            ExprKind::Name(n) => Some(Place {
                root: n.clone(),
                path: Vec::new(),
            }),
            ExprKind::Index(base, key) => {
                let mut p = base.as_place()?;
                p.path.push((**key).clone());
                Some(p)
            }
            _ => None,
        }
    }
}
