use std::fmt;

use super::ast::*;
use crate::state::RawState;

/// Prefixes that describe an object's configuration rather than its identity.
pub const DEFAULT_CONFIG_PREFIXES: &[&str] = &["unopened_", "locked_", "closed_", "blocked_", "unblocked_", "open_"];

const RESERVED: &[&str] = &[
    "if", "else", "elif", "in", "def", "for", "while", "return", "and", "or", "not", "is", "import", "from", "class",
    "lambda", "pass", "break", "continue", "none", "true", "false", "del", "global", "with", "try", "except", "yield",
];

const SPATIAL_WORDS: &[&str] = &[
    "from", "to", "at", "adjacent", "near", "nextto", "leftof", "rightof", "above", "below",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IssueKind {
    HyphenInName,
    UppercaseName,
    ReservedName,
    UnderscoreInPredicate,
    SpatialRelation,
    UndeclaredPredicate,
    ArityMismatch,
    UndeclaredType,
    UndeclaredObject,
    UnboundVariable,
    TypeMismatch,
    DomainNameMismatch,
    ObjectNotInState,
    DuplicateName,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub severity: Severity,
    pub kind: IssueKind,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{sev}: {}", self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors().next().is_none()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }

    pub fn has(&self, kind: IssueKind) -> bool {
        self.issues.iter().any(|i| i.kind == kind)
    }

    fn push(&mut self, severity: Severity, kind: IssueKind, message: String) {
        self.issues.push(Issue {
            severity,
            kind,
            message,
        });
    }

    fn error(&mut self, kind: IssueKind, message: String) {
        self.push(Severity::Error, kind, message);
    }

    fn warn(&mut self, kind: IssueKind, message: String) {
        self.push(Severity::Warning, kind, message);
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in &self.issues {
            writeln!(f, "{i}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ValidateOptions<'a> {
    pub raw_state: Option<&'a RawState>,
    pub config_prefixes: Vec<String>,
}

impl Default for ValidateOptions<'_> {
    fn default() -> Self {
        ValidateOptions {
            raw_state: None,
            config_prefixes: DEFAULT_CONFIG_PREFIXES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl<'a> ValidateOptions<'a> {
    pub fn with_state(state: &'a RawState) -> Self {
        ValidateOptions {
            raw_state: Some(state),
            ..Self::default()
        }
    }
}

/// True when `object` names `key` directly or after stripping one configuration prefix.
pub fn object_matches_key(object: &str, key: &str, prefixes: &[String]) -> bool {
    object == key || prefixes.iter().any(|p| key.strip_prefix(p.as_str()) == Some(object))
}

fn check_name(report: &mut ValidationReport, what: &str, name: &str) {
    if name.contains('-') {
        report.error(IssueKind::HyphenInName, format!("hyphen in name: {what} `{name}`"));
    }
    if name.chars().any(|c| c.is_ascii_uppercase()) {
        report.error(IssueKind::UppercaseName, format!("uppercase in name: {what} `{name}`"));
    }
    if RESERVED.contains(&name.to_ascii_lowercase().as_str()) {
        report.error(IssueKind::ReservedName, format!("{what} `{name}` is a reserved word"));
    }
}

fn is_spatial(name: &str) -> bool {
    let lower = name.to_ascii_lowercase();
    SPATIAL_WORDS.contains(&lower.as_str())
        || ["from", "to"]
            .iter()
            .any(|w| lower.starts_with(w) || lower.ends_with(w))
}

pub fn validate(domain: &DomainAst, problem: &ProblemAst, opts: &ValidateOptions<'_>) -> ValidationReport {
    let mut report = ValidationReport::default();

    for t in &domain.types {
        if let Some(p) = &t.parent {
            if !domain.has_type(p) {
                report.error(
                    IssueKind::UndeclaredType,
                    format!("type `{}` has undeclared parent `{p}`", t.name),
                );
            }
        }
    }

    let mut seen = std::collections::BTreeSet::new();
    for p in &domain.predicates {
        check_name(&mut report, "predicate", &p.name);
        if !seen.insert(format!("p:{}", p.name)) {
            report.error(
                IssueKind::DuplicateName,
                format!("predicate `{}` declared twice", p.name),
            );
        }
        if p.name.contains('_') {
            report.warn(
                IssueKind::UnderscoreInPredicate,
                format!("predicate `{}` should be a single word without underscores", p.name),
            );
        }
        if is_spatial(&p.name) {
            report.warn(
                IssueKind::SpatialRelation,
                format!("predicate `{}` looks like a from/to spatial relation", p.name),
            );
        }
        for param in &p.params {
            if !domain.has_type(&param.ty) {
                report.error(
                    IssueKind::UndeclaredType,
                    format!("predicate `{}` uses undeclared type `{}`", p.name, param.ty),
                );
            }
        }
    }

    for a in &domain.actions {
        check_name(&mut report, "action", &a.name);
        if !seen.insert(format!("a:{}", a.name)) {
            report.error(IssueKind::DuplicateName, format!("action `{}` declared twice", a.name));
        }
        for param in &a.params {
            if !domain.has_type(&param.ty) {
                report.error(
                    IssueKind::UndeclaredType,
                    format!("action `{}` uses undeclared type `{}`", a.name, param.ty),
                );
            }
        }
        for lit in a.precondition.iter().chain(&a.effect) {
            check_literal(&mut report, domain, lit, &format!("action `{}`", a.name), |arg| {
                a.params.iter().find(|p| p.name == arg).map(|p| p.ty.clone())
            });
        }
    }

    if !problem.domain.is_empty() && !domain.name.is_empty() && problem.domain != domain.name {
        report.warn(
            IssueKind::DomainNameMismatch,
            format!(
                "problem refers to domain `{}` but domain is `{}`",
                problem.domain, domain.name
            ),
        );
    }

    for o in &problem.objects {
        if !domain.has_type(&o.ty) {
            report.error(
                IssueKind::UndeclaredType,
                format!("object `{}` has undeclared type `{}`", o.name, o.ty),
            );
        }
        if let Some(state) = opts.raw_state {
            let known = state
                .keys()
                .any(|k| object_matches_key(&o.name, k, &opts.config_prefixes));
            if !known {
                report.error(
                    IssueKind::ObjectNotInState,
                    format!("object `{}` is not a key of the raw state", o.name),
                );
            }
        }
    }

    let object_ty = |arg: &str| problem.object_type(arg).map(str::to_string);
    for atom in &problem.init {
        let lit = Literal::positive(atom.predicate.clone(), atom.args.clone());
        check_literal(&mut report, domain, &lit, "init", object_ty);
    }
    for lit in &problem.goals {
        check_literal(&mut report, domain, lit, "goal", object_ty);
    }
    report
}

fn check_literal(
    report: &mut ValidationReport,
    domain: &DomainAst,
    lit: &Literal,
    context: &str,
    resolve: impl Fn(&str) -> Option<String>,
) {
    let Some(decl) = domain.predicate(&lit.predicate) else {
        report.error(
            IssueKind::UndeclaredPredicate,
            format!("{context}: undeclared predicate `{}`", lit.predicate),
        );
        return;
    };
    if decl.arity() != lit.args.len() {
        report.error(
            IssueKind::ArityMismatch,
            format!(
                "{context}: `{}` takes {} arguments, got {}",
                lit.predicate,
                decl.arity(),
                lit.args.len()
            ),
        );
        return;
    }
    for (arg, param) in lit.args.iter().zip(&decl.params) {
        match resolve(arg) {
            None if arg.starts_with('?') => report.error(
                IssueKind::UnboundVariable,
                format!("{context}: variable `{arg}` is not a parameter"),
            ),
            None => report.error(
                IssueKind::UndeclaredObject,
                format!("{context}: object `{arg}` is not declared"),
            ),
            Some(ty) if !domain.is_subtype(&ty, &param.ty) => report.error(
                IssueKind::TypeMismatch,
                format!(
                    "{context}: `{arg}` of type `{ty}` cannot fill `{}` parameter of `{}`",
                    param.ty, lit.predicate
                ),
            ),
            Some(_) => {}
        }
    }
}
