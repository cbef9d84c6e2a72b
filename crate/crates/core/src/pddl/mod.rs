//! STRIPS-with-typing PDDL front end and breadth-first planner.
//!
//! Supported subset: `:strips`, `:typing`, negative preconditions,
//! conjunctive and multiple goals. Everything else is rejected with
//! [`ParseError::UnsupportedFeature`]. Negative literals in `:init` are
//! dropped with a warning on the parsed problem (closed world).

mod ast;
mod ground;
mod parser;
mod planner;
mod printer;
pub mod sexpr;
mod validate;

use thiserror::Error;

pub use ast::{ActionSchema, Atom, DomainAst, Literal, PredicateDecl, ProblemAst, TypeDecl, TypedName};
pub use ground::{ground, instantiate, GroundedOperator};
pub use parser::{parse_domain, parse_problem};
pub use planner::{plan, plan_with_operators, simulate, HighLevelPlan, DEFAULT_MAX_NODES};
pub use printer::{print_domain, print_problem};
pub use validate::{
    object_matches_key, validate, Issue, IssueKind, Severity, ValidateOptions, ValidationReport,
    DEFAULT_CONFIG_PREFIXES,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: expected {expected}")]
    Syntax { line: usize, col: usize, expected: String },
    #[error("unsupported feature at {line}:{col}: {feature}")]
    UnsupportedFeature { line: usize, col: usize, feature: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("no plan: goal unreachable after exploring {explored} states")]
    Unsolvable { explored: usize },
    #[error("node budget of {max_nodes} exceeded")]
    ResourceLimit { max_nodes: usize },
    #[error("planner invariant violated: {0}")]
    Internal(String),
}
