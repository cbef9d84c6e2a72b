use super::ast::*;
use super::sexpr::{read_all, Sexp};
use super::ParseError;

const SUPPORTED_REQUIREMENTS: &[&str] = &[":strips", ":typing", ":negative-preconditions"];

fn syntax(node: &Sexp, expected: impl Into<String>) -> ParseError {
    let (line, col) = node.location();
    ParseError::Syntax {
        line,
        col,
        expected: expected.into(),
    }
}

fn unsupported(node: &Sexp, what: impl Into<String>) -> ParseError {
    let (line, col) = node.location();
    ParseError::UnsupportedFeature {
        line,
        col,
        feature: what.into(),
    }
}

fn single_define<'a>(forms: &'a [Sexp], kind: &str) -> Result<(&'a [Sexp], &'a Sexp), ParseError> {
    let form = forms
        .iter()
        .find(|f| f.head().as_deref() == Some("define"))
        .ok_or(ParseError::Syntax {
            line: 1,
            col: 1,
            expected: format!("(define ({kind} ...))"),
        })?;
    let items = form.list().unwrap_or_default();
    let header = items.get(1).ok_or_else(|| syntax(form, format!("({kind} <name>)")))?;
    if header.head().as_deref() != Some(kind) {
        return Err(syntax(header, format!("({kind} <name>)")));
    }
    Ok((items, header))
}

fn name_of(header: &Sexp) -> Result<String, ParseError> {
    header
        .list()
        .and_then(|l| l.get(1))
        .and_then(Sexp::atom)
        .map(str::to_string)
        .ok_or_else(|| syntax(header, "a name"))
}

/// Parses a typed list such as `?a ?b - key ?c` or `table mug - object`.
fn typed_list(items: &[Sexp], want_vars: bool) -> Result<Vec<TypedName>, ParseError> {
    let mut out = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let node = &items[i];
        let text = node.atom().ok_or_else(|| syntax(node, "a name"))?;
        if text == "-" {
            let ty_node = items.get(i + 1).ok_or_else(|| syntax(node, "a type after `-`"))?;
            if ty_node.head().as_deref() == Some("either") {
                return Err(unsupported(ty_node, "either types"));
            }
            let ty = ty_node.atom().ok_or_else(|| syntax(ty_node, "a type name"))?;
            if pending.is_empty() {
                return Err(syntax(node, "a name before `-`"));
            }
            for n in pending.drain(..) {
                out.push(TypedName::new(n, ty));
            }
            i += 2;
            continue;
        }
        if want_vars && !text.starts_with('?') {
            return Err(syntax(node, "a variable like `?x`"));
        }
        pending.push(text.to_string());
        i += 1;
    }
    for n in pending {
        out.push(TypedName::new(n, "object"));
    }
    Ok(out)
}

fn literal(node: &Sexp) -> Result<Literal, ParseError> {
    let items = node.list().ok_or_else(|| syntax(node, "a literal `(pred ...)`"))?;
    let head = node.head().ok_or_else(|| syntax(node, "a predicate name"))?;
    match head.as_str() {
        "not" => {
            if items.len() != 2 {
                return Err(syntax(node, "(not (pred ...))"));
            }
            let mut inner = literal(&items[1])?;
            if inner.negated {
                return Err(unsupported(node, "nested negation"));
            }
            inner.negated = true;
            Ok(inner)
        }
        "or" | "imply" | "forall" | "exists" | "when" | "=" | "increase" | "decrease" | "assign" | "either" | "and" => {
            Err(unsupported(node, format!("`{head}` in a literal position")))
        }
        _ => {
            let pred = items[0].atom().unwrap_or_default().to_string();
            let mut args = Vec::new();
            for a in &items[1..] {
                args.push(a.atom().ok_or_else(|| syntax(a, "an argument"))?.to_string());
            }
            Ok(Literal::positive(pred, args))
        }
    }
}

/// A conjunction: `()`, a single literal, or `(and lit...)`.
fn conjunction(node: &Sexp) -> Result<Vec<Literal>, ParseError> {
    let items = node.list().ok_or_else(|| syntax(node, "a condition list"))?;
    if items.is_empty() {
        return Ok(Vec::new());
    }
    if node.head().as_deref() == Some("and") {
        let mut out = Vec::new();
        for it in &items[1..] {
            if it.head().as_deref() == Some("and") {
                out.extend(conjunction(it)?);
            } else {
                out.push(literal(it)?);
            }
        }
        Ok(out)
    } else {
        Ok(vec![literal(node)?])
    }
}

fn section_key(node: &Sexp) -> Option<String> {
    node.head().filter(|h| h.starts_with(':'))
}

pub fn parse_domain(text: &str) -> Result<DomainAst, ParseError> {
    let forms = read_all(text)?;
    let (items, header) = single_define(&forms, "domain")?;
    let mut domain = DomainAst {
        name: name_of(header)?,
        ..DomainAst::default()
    };
    for section in &items[2..] {
        let key = section_key(section).ok_or_else(|| syntax(section, "a `(:section ...)`"))?;
        let body = &section.list().unwrap_or_default()[1..];
        match key.as_str() {
            ":requirements" => {
                for r in body {
                    let r_text = r.atom().ok_or_else(|| syntax(r, "a requirement flag"))?;
                    let lower = r_text.to_ascii_lowercase();
                    if !SUPPORTED_REQUIREMENTS.contains(&lower.as_str()) {
                        return Err(unsupported(r, format!("requirement {r_text}")));
                    }
                    domain.requirements.push(lower);
                }
            }
            ":types" => {
                for t in typed_list(body, false)? {
                    let parent = if t.name == "object" { None } else { Some(t.ty) };
                    domain.types.push(TypeDecl { name: t.name, parent });
                }
            }
            ":predicates" => {
                for p in body {
                    let parts = p.list().ok_or_else(|| syntax(p, "(pred ?x - type ...)"))?;
                    let name = parts
                        .first()
                        .and_then(Sexp::atom)
                        .ok_or_else(|| syntax(p, "a predicate name"))?;
                    domain.predicates.push(PredicateDecl {
                        name: name.to_string(),
                        params: typed_list(&parts[1..], true)?,
                    });
                }
            }
            ":action" => domain.actions.push(action(section, body)?),
            ":constants" | ":functions" | ":derived" | ":durative-action" | ":constraints" => {
                return Err(unsupported(section, key));
            }
            _ => return Err(syntax(section, "a known domain section")),
        }
    }
    if !domain.types.iter().any(|t| t.name == "object") {
        domain.types.insert(
            0,
            TypeDecl {
                name: "object".into(),
                parent: None,
            },
        );
    }
    Ok(domain)
}

fn action(section: &Sexp, body: &[Sexp]) -> Result<ActionSchema, ParseError> {
    let name = body
        .first()
        .and_then(Sexp::atom)
        .ok_or_else(|| syntax(section, "an action name"))?;
    let mut schema = ActionSchema {
        name: name.to_string(),
        params: Vec::new(),
        precondition: Vec::new(),
        effect: Vec::new(),
    };
    let mut i = 1;
    while i < body.len() {
        let key = body[i]
            .atom()
            .map(str::to_ascii_lowercase)
            .ok_or_else(|| syntax(&body[i], ":parameters, :precondition or :effect"))?;
        let value = body.get(i + 1).ok_or_else(|| syntax(&body[i], "a value"))?;
        match key.as_str() {
            ":parameters" => {
                let items = value.list().ok_or_else(|| syntax(value, "(?x - type ...)"))?;
                schema.params = typed_list(items, true)?;
            }
            ":precondition" => schema.precondition = conjunction(value)?,
            ":effect" => schema.effect = conjunction(value)?,
            _ => return Err(unsupported(&body[i], format!("action key {key}"))),
        }
        i += 2;
    }
    Ok(schema)
}

pub fn parse_problem(text: &str) -> Result<ProblemAst, ParseError> {
    let forms = read_all(text)?;
    let (items, header) = single_define(&forms, "problem")?;
    let mut problem = ProblemAst {
        name: name_of(header)?,
        ..ProblemAst::default()
    };
    for section in &items[2..] {
        let key = section_key(section).ok_or_else(|| syntax(section, "a `(:section ...)`"))?;
        let body = &section.list().unwrap_or_default()[1..];
        match key.as_str() {
            ":domain" => {
                problem.domain = body
                    .first()
                    .and_then(Sexp::atom)
                    .ok_or_else(|| syntax(section, "a domain name"))?
                    .to_string();
            }
            ":requirements" => {}
            ":objects" => problem.objects = typed_list(body, false)?,
            ":init" => {
                for lit in body {
                    let l = literal(lit)?;
                    if l.negated {
                        problem
                            .warnings
                            .push(format!("dropped negative init literal {l} (closed world)"));
                    } else if !problem.init.contains(&l.atom()) {
                        problem.init.push(l.atom());
                    }
                }
            }
            ":goal" => {
                let goal = body.first().ok_or_else(|| syntax(section, "a goal condition"))?;
                problem.goals = conjunction(goal)?;
            }
            ":metric" | ":constraints" => return Err(unsupported(section, key)),
            _ => return Err(syntax(section, "a known problem section")),
        }
    }
    if problem.goals.is_empty() {
        let (line, col) = header.location();
        return Err(ParseError::Syntax {
            line,
            col,
            expected: "a non-empty (:goal ...)".into(),
        });
    }
    Ok(problem)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY_DOMAIN: &str = "(define (domain toy-domain)
  (:requirements :strips :typing)
  (:types object)
  (:predicates (ontop ?x - object ?y - object))
  (:action placeontopof
    :parameters (?obj1 - object ?obj2 - object)
    :precondition (not (ontop ?obj1 ?obj2))
    :effect (ontop ?obj1 ?obj2)))";

    #[test]
    fn parses_toy_domain() {
        let d = parse_domain(TOY_DOMAIN).unwrap();
        assert_eq!(d.name, "toy-domain");
        assert_eq!(d.types.len(), 1);
        assert_eq!(d.predicates.len(), 1);
        assert_eq!(d.predicates[0].arity(), 2);
        assert_eq!(d.actions[0].name, "placeontopof");
        assert_eq!(
            d.actions[0].precondition,
            vec![Literal::negative("ontop", vec!["?obj1".into(), "?obj2".into()])]
        );
        assert_eq!(d.requirements, vec![":strips", ":typing"]);
    }

    #[test]
    fn typed_objects_and_hierarchy() {
        let d = parse_domain("(define (domain d) (:types key door - item item) (:predicates (p ?x - key)))").unwrap();
        assert!(d.is_subtype("key", "item"));
        assert!(d.is_subtype("key", "object"));
        assert!(!d.is_subtype("item", "key"));
    }

    #[test]
    fn rejects_unsupported_features() {
        let cond = "(define (domain d) (:predicates (p ?x)) (:action a :parameters (?x) :precondition (p ?x) :effect (when (p ?x) (not (p ?x)))))";
        assert!(matches!(parse_domain(cond), Err(ParseError::UnsupportedFeature { .. })));
        let fluents = "(define (domain d) (:requirements :strips :numeric-fluents))";
        assert!(matches!(
            parse_domain(fluents),
            Err(ParseError::UnsupportedFeature { .. })
        ));
        let funcs = "(define (domain d) (:functions (cost)))";
        assert!(matches!(
            parse_domain(funcs),
            Err(ParseError::UnsupportedFeature { .. })
        ));
        let disj =
            "(define (domain d) (:predicates (p)) (:action a :parameters () :precondition (or (p) (p)) :effect (p)))";
        assert!(matches!(parse_domain(disj), Err(ParseError::UnsupportedFeature { .. })));
    }

    #[test]
    fn syntax_errors_carry_location() {
        let err = parse_domain("(define (domain d)\n  (:predicates (p ?x - )))").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 2, .. }), "{err:?}");
        assert!(parse_domain("(define (problem p))").is_err());
    }

    #[test]
    fn problem_with_two_goals_and_negative_init() {
        let p = parse_problem(
            "(define (problem p) (:domain d) (:objects a b - object)
               (:init (not (eaten a b)) (ready a))
               (:goal (and (eaten a b) (not (ready a)))))",
        )
        .unwrap();
        assert_eq!(p.goals.len(), 2);
        assert_eq!(p.init, vec![Atom::new("ready", &["a"])]);
        assert_eq!(p.warnings.len(), 1);
    }

    #[test]
    fn empty_goal_is_rejected() {
        assert!(parse_problem("(define (problem p) (:domain d) (:goal (and)))").is_err());
    }
}
