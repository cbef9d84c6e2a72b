use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypedName {
    pub name: String,
    pub ty: String,
}

impl TypedName {
    pub fn new(name: impl Into<String>, ty: impl Into<String>) -> Self {
        TypedName {
            name: name.into(),
            ty: ty.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDecl {
    pub name: String,
    pub parent: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateDecl {
    pub name: String,
    pub params: Vec<TypedName>,
}

impl PredicateDecl {
    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

/// A possibly negated literal. Arguments are variables (`?x`) in schemas and
/// object names in problems.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub predicate: String,
    pub args: Vec<String>,
    pub negated: bool,
}

impl Literal {
    pub fn positive(predicate: impl Into<String>, args: Vec<String>) -> Self {
        Literal {
            predicate: predicate.into(),
            args,
            negated: false,
        }
    }

    pub fn negative(predicate: impl Into<String>, args: Vec<String>) -> Self {
        Literal {
            negated: true,
            ..Literal::positive(predicate, args)
        }
    }

    pub fn atom(&self) -> Atom {
        Atom {
            predicate: self.predicate.clone(),
            args: self.args.clone(),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "(not {})", self.atom())
        } else {
            write!(f, "{}", self.atom())
        }
    }
}

/// Ground (or schematic) positive atom.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, args: &[&str]) -> Self {
        Atom {
            predicate: predicate.into(),
            args: args.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<TypedName>,
    pub precondition: Vec<Literal>,
    pub effect: Vec<Literal>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DomainAst {
    pub name: String,
    pub requirements: Vec<String>,
    pub types: Vec<TypeDecl>,
    pub predicates: Vec<PredicateDecl>,
    pub actions: Vec<ActionSchema>,
}

impl DomainAst {
    pub fn predicate(&self, name: &str) -> Option<&PredicateDecl> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn action(&self, name: &str) -> Option<&ActionSchema> {
        self.actions.iter().find(|a| a.name == name)
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty() && self.predicates.is_empty()
    }

    pub fn has_type(&self, ty: &str) -> bool {
        ty == "object" || self.types.iter().any(|t| t.name == ty)
    }

    /// True when an object of type `ty` may bind a parameter of type `param_ty`.
    pub fn is_subtype(&self, ty: &str, param_ty: &str) -> bool {
        let mut cur = Some(ty.to_string());
        let mut hops = 0;
        while let Some(t) = cur {
            if t == param_ty || param_ty == "object" {
                return true;
            }
            hops += 1;
            if hops > self.types.len() + 1 {
                return false;
            }
            cur = self.types.iter().find(|d| d.name == t).and_then(|d| d.parent.clone());
        }
        false
    }

    /// Adds every type, predicate, and action from `other`; same-named
    /// definitions in `other` replace ours. Returns the names of added or
    /// replaced actions.
    pub fn merge(&mut self, other: &DomainAst) -> Vec<String> {
        if self.name.is_empty() {
            self.name = other.name.clone();
        }
        for r in &other.requirements {
            if !self.requirements.contains(r) {
                self.requirements.push(r.clone());
            }
        }
        for t in &other.types {
            match self.types.iter_mut().find(|x| x.name == t.name) {
                Some(x) => *x = t.clone(),
                None => self.types.push(t.clone()),
            }
        }
        for p in &other.predicates {
            match self.predicates.iter_mut().find(|x| x.name == p.name) {
                Some(x) => *x = p.clone(),
                None => self.predicates.push(p.clone()),
            }
        }
        let mut changed = Vec::new();
        for a in &other.actions {
            match self.actions.iter_mut().find(|x| x.name == a.name) {
                Some(x) if x == a => {}
                Some(x) => {
                    *x = a.clone();
                    changed.push(a.name.clone());
                }
                None => {
                    self.actions.push(a.clone());
                    changed.push(a.name.clone());
                }
            }
        }
        changed
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ProblemAst {
    pub name: String,
    pub domain: String,
    pub objects: Vec<TypedName>,
    pub init: Vec<Atom>,
    pub goals: Vec<Literal>,
    /// Non-fatal notes from parsing, e.g. dropped negative init literals.
    pub warnings: Vec<String>,
}

impl ProblemAst {
    pub fn object_type(&self, name: &str) -> Option<&str> {
        self.objects.iter().find(|o| o.name == name).map(|o| o.ty.as_str())
    }
}
