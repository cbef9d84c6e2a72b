use std::fmt;

use super::ast::*;

/// An action schema with every parameter bound to an object.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundedOperator {
    pub schema: String,
    pub args: Vec<String>,
    pub precondition: Vec<Literal>,
    pub effect: Vec<Literal>,
}

impl GroundedOperator {
    /// Compact identifier used as the operator tag on transitions.
    pub fn tag(&self) -> String {
        format!("{}({})", self.schema, self.args.join(","))
    }
}

impl fmt::Display for GroundedOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.schema, self.args.join(", "))
    }
}

fn substitute(lits: &[Literal], params: &[TypedName], args: &[String]) -> Vec<Literal> {
    lits.iter()
        .map(|l| Literal {
            predicate: l.predicate.clone(),
            negated: l.negated,
            args: l
                .args
                .iter()
                .map(|a| {
                    params
                        .iter()
                        .position(|p| &p.name == a)
                        .map(|i| args[i].clone())
                        .unwrap_or_else(|| a.clone())
                })
                .collect(),
        })
        .collect()
}

pub fn instantiate(schema: &ActionSchema, args: Vec<String>) -> GroundedOperator {
    GroundedOperator {
        schema: schema.name.clone(),
        precondition: substitute(&schema.precondition, &schema.params, &args),
        effect: substitute(&schema.effect, &schema.params, &args),
        args,
    }
}

/// Every type-consistent instantiation, sorted by schema name then arguments.
pub fn ground(domain: &DomainAst, problem: &ProblemAst) -> Vec<GroundedOperator> {
    let mut out = Vec::new();
    for schema in &domain.actions {
        let candidates: Vec<Vec<&str>> = schema
            .params
            .iter()
            .map(|p| {
                let mut objs: Vec<&str> = problem
                    .objects
                    .iter()
                    .filter(|o| domain.is_subtype(&o.ty, &p.ty))
                    .map(|o| o.name.as_str())
                    .collect();
                objs.sort_unstable();
                objs.dedup();
                objs
            })
            .collect();
        if candidates.iter().any(Vec::is_empty) {
            continue;
        }
        let total: usize = candidates.iter().map(Vec::len).product();
        for n in 0..total {
            let mut rest = n;
            let mut args = vec![String::new(); candidates.len()];
            for k in (0..candidates.len()).rev() {
                let c = &candidates[k];
                args[k] = c[rest % c.len()].to_string();
                rest /= c.len();
            }
            out.push(instantiate(schema, args));
        }
    }
    out.sort_by(|a, b| (&a.schema, &a.args).cmp(&(&b.schema, &b.args)));
    out
}
