use std::fmt::Write;

use super::ast::*;

fn typed(names: &[TypedName]) -> String {
    let mut out = String::new();
    let mut i = 0;
    while i < names.len() {
        let ty = &names[i].ty;
        let mut j = i;
        while j < names.len() && &names[j].ty == ty {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(&names[j].name);
            j += 1;
        }
        let _ = write!(out, " - {ty}");
        i = j;
    }
    out
}

fn conj(lits: &[Literal]) -> String {
    match lits {
        [] => "()".to_string(),
        [one] => one.to_string(),
        many => {
            let inner: Vec<String> = many.iter().map(Literal::to_string).collect();
            format!("(and {})", inner.join(" "))
        }
    }
}

pub fn print_domain(d: &DomainAst) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(define (domain {})", d.name);
    if !d.requirements.is_empty() {
        let _ = writeln!(out, "  (:requirements {})", d.requirements.join(" "));
    }
    out.push_str("\n  (:types\n");
    for t in &d.types {
        match &t.parent {
            Some(p) => {
                let _ = writeln!(out, "    {} - {p}", t.name);
            }
            None => {
                let _ = writeln!(out, "    {}", t.name);
            }
        }
    }
    out.push_str("  )\n\n  (:predicates\n");
    for p in &d.predicates {
        if p.params.is_empty() {
            let _ = writeln!(out, "    ({})", p.name);
        } else {
            let _ = writeln!(out, "    ({} {})", p.name, typed(&p.params));
        }
    }
    out.push_str("  )\n");
    for a in &d.actions {
        let _ = writeln!(out, "\n  (:action {}", a.name);
        let _ = writeln!(out, "    :parameters ({})", typed(&a.params));
        let _ = writeln!(out, "    :precondition {}", conj(&a.precondition));
        let _ = writeln!(out, "    :effect {}", conj(&a.effect));
        out.push_str("  )\n");
    }
    out.push_str(")\n");
    out
}

pub fn print_problem(p: &ProblemAst) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(define (problem {})", p.name);
    let _ = writeln!(out, "  (:domain {})", p.domain);
    let _ = writeln!(out, "\n  (:objects\n    {}\n  )", typed(&p.objects));
    out.push_str("\n  (:init\n");
    for a in &p.init {
        let _ = writeln!(out, "    {a}");
    }
    out.push_str("  )\n\n  (:goal\n");
    let _ = writeln!(out, "    {}", conj(&p.goals));
    out.push_str("  )\n)\n");
    out
}
