//! World-model DSL: a small Python-shaped language for transition models
//! and predicate classifiers, with a sandboxed, step-bounded interpreter.
//!
//! Programs are parsed once and evaluated many times. Evaluation is pure:
//! the input state is converted to values, the program works on its own
//! copy, and the result is converted back. See `docs/wmdsl.md` for the
//! grammar.

mod ast;
mod builtins;
mod check;
mod interp;
mod lexer;
mod parser;
mod value;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::state::{Action, RawState};

pub use ast::Module;
pub use builtins::{builtin_library, render_catalog, BuiltinDoc};
pub use value::DslValue;

/// Side channel a rejected construct would have opened.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SandboxChannel {
    Filesystem,
    Network,
    Clock,
    Process,
    Randomness,
    Io,
    Reflection,
    Import,
    UnboundedLoop,
    Recursion,
    HigherOrder,
    Construct,
}

impl fmt::Display for SandboxChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("sandbox violation ({channel}) at line {line}, column {col}: {detail}")]
    SandboxViolation {
        line: usize,
        col: usize,
        channel: SandboxChannel,
        detail: String,
    },
    #[error("entry point: {0}")]
    Entry(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FaultKind {
    MissingKey,
    IndexOutOfRange,
    TypeMismatch,
    UndefinedName,
    ValueError,
    Overflow,
    DivisionByZero,
    MalformedState,
    ArityMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind:?} at line {line}: {message}")]
pub struct RuntimeFault {
    pub kind: FaultKind,
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("step budget of {budget} exceeded")]
    StepBudgetExceeded { budget: u64 },
    #[error("allocation of {requested} elements exceeds the limit of {limit}")]
    MemoryLimit { limit: usize, requested: usize },
    #[error("runtime fault: {0}")]
    Runtime(#[from] RuntimeFault),
}

impl EvalError {
    pub fn fault_kind(&self) -> Option<FaultKind> {
        match self {
            EvalError::Runtime(f) => Some(f.kind),
            _ => None,
        }
    }
}

/// Per-call evaluation bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Limits {
    pub step_budget: u64,
    pub max_collection_len: usize,
    pub max_call_depth: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            step_budget: 100_000,
            max_collection_len: 100_000,
            max_call_depth: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProgramKind {
    Transition,
    Predicate { name: String, arity: usize },
}

#[derive(Debug, Clone)]
pub enum Program {
    Transition(TransitionProgram),
    Predicate(PredicateProgram),
}

/// Parses, checks and resolves the entry point in one go.
pub fn parse_program(text: &str, kind: ProgramKind) -> Result<Program, ParseError> {
    Ok(match kind {
        ProgramKind::Transition => Program::Transition(TransitionProgram::parse(text)?),
        ProgramKind::Predicate { name, arity } => Program::Predicate(PredicateProgram::parse(text, &name, arity)?),
    })
}

fn parse_checked(text: &str) -> Result<Module, ParseError> {
    let m = parser::parse_module(text)?;
    check::check_module(&m)?;
    Ok(m)
}

/// A transition model `transition(state, action) -> state`.
#[derive(Debug, Clone)]
pub struct TransitionProgram {
    source: String,
    module: Arc<Module>,
    entry: String,
}

pub const EMPTY_TRANSITION: &str = "def transition(state, action):\n    return state\n";

impl TransitionProgram {
    /// Accepts `transition` or `transition_model` taking two parameters.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let module = parse_checked(text)?;
        let entry = ["transition", "transition_model"]
            .into_iter()
            .find(|n| module.function(n).is_some())
            .ok_or_else(|| ParseError::Entry("no `transition(state, action)` function".into()))?;
        let f = module.function(entry).expect("found above");
        if f.params.len() != 2 {
            return Err(ParseError::Entry(format!(
                "`{entry}` must take (state, action), found {} parameters",
                f.params.len()
            )));
        }
        Ok(TransitionProgram {
            source: text.to_string(),
            entry: entry.to_string(),
            module: Arc::new(module),
        })
    }

    /// The model that predicts no change.
    pub fn empty() -> Self {
        Self::parse(EMPTY_TRANSITION).expect("empty model parses")
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

/// A predicate classifier `name(state, arg1, ..., argN) -> bool`.
#[derive(Debug, Clone)]
pub struct PredicateProgram {
    predicate: String,
    arity: usize,
    source: String,
    module: Arc<Module>,
    entry: String,
}

impl PredicateProgram {
    /// The entry is the function named after the predicate, or `holds`,
    /// and must take the state followed by `arity` object names.
    pub fn parse(text: &str, predicate: &str, arity: usize) -> Result<Self, ParseError> {
        let module = parse_checked(text)?;
        Self::from_module(text, Arc::new(module), predicate, arity)
    }

    fn from_module(text: &str, module: Arc<Module>, predicate: &str, arity: usize) -> Result<Self, ParseError> {
        let entry = [predicate, "holds"]
            .into_iter()
            .find(|n| module.function(n).is_some())
            .ok_or_else(|| ParseError::Entry(format!("no function for predicate `{predicate}`")))?;
        let f = module.function(entry).expect("found above");
        if f.params.len() != arity + 1 {
            return Err(ParseError::Entry(format!(
                "`{entry}` must take the state plus {arity} arguments, found {} parameters",
                f.params.len()
            )));
        }
        Ok(PredicateProgram {
            predicate: predicate.to_string(),
            arity,
            source: text.to_string(),
            entry: entry.to_string(),
            module,
        })
    }

    pub fn predicate(&self) -> &str {
        &self.predicate
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

/// Classifiers found, plus the reason for each requested predicate that has none.
pub type ParsedPredicates = (Vec<PredicateProgram>, Vec<(String, ParseError)>);

/// Extracts one classifier per requested predicate from a single source
/// block that may define several. Returns the programs found and, for each
/// predicate without a usable definition, the reason.
pub fn parse_predicates(text: &str, predicates: &[(String, usize)]) -> Result<ParsedPredicates, ParseError> {
    let module = Arc::new(parse_checked(text)?);
    let mut found = Vec::new();
    let mut missing = Vec::new();
    for (name, arity) in predicates {
        if module.function(name).is_none() {
            missing.push((
                name.clone(),
                ParseError::Entry(format!("no function for predicate `{name}`")),
            ));
            continue;
        }
        match PredicateProgram::from_module(text, module.clone(), name, *arity) {
            Ok(p) => found.push(p),
            Err(e) => missing.push((name.clone(), e)),
        }
    }
    Ok((found, missing))
}

/// Applies a transition model. The input state is never modified.
pub fn run_transition(
    program: &TransitionProgram,
    state: &RawState,
    action: &Action,
    limits: &Limits,
) -> Result<RawState, EvalError> {
    let mut it = interp::Interp::new(&program.module, *limits);
    let out = it.run(
        &program.entry,
        vec![DslValue::from_state(state), DslValue::str(action.as_str())],
    )?;
    out.to_state()
        .map_err(|m| interp::fault(FaultKind::MalformedState, 0, m))
}

/// Evaluates a classifier. Runtime faults (such as a missing object) count
/// as false; only exhausted budgets are reported.
pub fn run_predicate(
    program: &PredicateProgram,
    state: &RawState,
    args: &[String],
    limits: &Limits,
) -> Result<bool, EvalError> {
    if args.len() != program.arity {
        return Ok(false);
    }
    let mut it = interp::Interp::new(&program.module, *limits);
    let mut vals = vec![DslValue::from_state(state)];
    vals.extend(args.iter().map(|a| DslValue::str(a)));
    match it.run(&program.entry, vals) {
        Ok(v) => Ok(v.truthy()),
        Err(EvalError::Runtime(f)) => {
            tracing::debug!(predicate = %program.predicate, fault = %f, "classifier fault treated as false");
            Ok(false)
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests;
