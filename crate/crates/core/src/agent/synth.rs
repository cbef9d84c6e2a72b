use std::collections::BTreeMap;

use super::{model_errors, AgentConfig, AgentError, ReplayBuffers};
use crate::envs::EnvironmentSpec;
use crate::llm::{
    extract_code_blocks, extract_code_blocks_any, few_shot_examples, utils_text, LlmClient, Purpose, TemplateName,
};
use crate::pddl::{
    parse_domain, parse_problem, plan, print_domain, print_problem, sexpr, validate, DomainAst, ProblemAst,
    ValidateOptions,
};
use crate::state::{RawState, Transition};
use crate::wmdsl::{parse_predicates, run_predicate, PredicateProgram, TransitionProgram};

/// Most prediction errors shown in one revision prompt.
const MAX_ERRORS_IN_PROMPT: usize = 8;

/// Fence tags accepted around model and classifier code.
const CODE_TAGS: &[&str] = &["wmdsl", "python", "py"];

/// Domain and problem ready for planning.
#[derive(Debug, Clone, PartialEq)]
pub struct Abstractions {
    /// The library domain with any newly synthesized definitions merged in.
    pub domain: DomainAst,
    pub problem: ProblemAst,
    /// True when the library domain was reused without a domain prompt.
    pub transferred: bool,
    /// Actions added or replaced by this synthesis.
    pub changed_actions: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct ClassifierSet {
    pub programs: BTreeMap<String, PredicateProgram>,
    /// Predicates obtained from the language model in this call.
    pub synthesized: Vec<String>,
    /// Predicates still lacking a usable classifier.
    pub ungrounded: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Revision {
    pub program: TransitionProgram,
    /// Prompts spent, including rejected candidates.
    pub attempts: usize,
}

fn bindings<'a>(pairs: impl IntoIterator<Item = (&'a str, String)>) -> BTreeMap<&'a str, String> {
    pairs.into_iter().collect()
}

fn render(name: TemplateName, pairs: BTreeMap<&str, String>) -> Result<String, AgentError> {
    Ok(name.template().render(&pairs)?)
}

fn repair_suffix(error: &str) -> Result<String, AgentError> {
    render(TemplateName::Repair, bindings([("error", error.to_string())]))
}

/// Sends `prompt`, then up to `repairs` follow-ups carrying the parse
/// error, until `parse` accepts a response.
fn ask_with_repair<T>(
    client: &mut LlmClient,
    purpose: Purpose,
    level: &str,
    prompt: &str,
    repairs: usize,
    mut parse: impl FnMut(&str) -> Result<T, String>,
) -> Result<T, AgentError> {
    let mut text = prompt.to_string();
    let mut last = String::new();
    for attempt in 0..=repairs {
        let reply = client.complete(purpose, level, &text)?;
        match parse(&reply.response) {
            Ok(v) => return Ok(v),
            Err(e) => {
                tracing::info!(%purpose, level, attempt, error = %e, "response rejected");
                text = format!("{prompt}{}", repair_suffix(&e)?);
                last = e;
            }
        }
    }
    Err(AgentError::SynthesisExhausted {
        what: purpose.to_string(),
        attempts: repairs + 1,
        last,
    })
}

/// Top-level parenthesized forms of `text`, skipping `;` comments.
pub fn split_pddl_forms(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    let mut in_comment = false;
    for (i, c) in text.char_indices() {
        if in_comment {
            in_comment = c != '\n';
            continue;
        }
        match c {
            ';' => in_comment = true,
            '(' => {
                if depth == 0 {
                    start = i;
                }
                depth += 1;
            }
            ')' if depth > 0 => {
                depth -= 1;
                if depth == 0 {
                    out.push(&text[start..=i]);
                }
            }
            _ => {}
        }
    }
    out
}

/// Last domain and last problem found in the response's pddl blocks.
fn parse_pddl_response(text: &str) -> Result<(Option<DomainAst>, Option<ProblemAst>), String> {
    let blocks = extract_code_blocks(text, "pddl");
    if blocks.is_empty() {
        return Err("the answer contains no ```pddl code block".into());
    }
    let mut domain = None;
    let mut problem = None;
    for block in &blocks {
        for form in split_pddl_forms(block) {
            let kind = sexpr::read_all(form).ok().and_then(|v| {
                v.first()
                    .and_then(|f| f.list().and_then(|l| l.get(1)).and_then(|s| s.head()))
            });
            match kind.as_deref() {
                Some("domain") => domain = Some(parse_domain(form).map_err(|e| format!("domain file: {e}"))?),
                Some("problem") => problem = Some(parse_problem(form).map_err(|e| format!("problem file: {e}"))?),
                _ => {}
            }
        }
    }
    Ok((domain, problem))
}

/// Checks a problem against the domain and the raw state, then plans.
fn check_problem(domain: &DomainAst, problem: &ProblemAst, s0: &RawState, config: &AgentConfig) -> Result<(), String> {
    let report = validate(domain, problem, &ValidateOptions::with_state(s0));
    if !report.is_valid() {
        return Err(report.errors().map(|i| i.to_string()).collect::<Vec<_>>().join("\n"));
    }
    plan(domain, problem, config.budgets.plan_nodes)
        .map(|_| ())
        .map_err(|e| format!("the problem cannot be solved with the domain: {e}"))
}

fn mission(spec: &EnvironmentSpec) -> String {
    spec.mission.clone().unwrap_or_else(|| "Win the game.".into())
}

/// Problem-only synthesis against a fixed domain.
pub fn synthesize_problem(
    client: &mut LlmClient,
    spec: &EnvironmentSpec,
    s0: &RawState,
    domain: &DomainAst,
    config: &AgentConfig,
) -> Result<ProblemAst, AgentError> {
    let prompt = render(
        TemplateName::Transfer,
        bindings([
            ("domain_description", spec.description.clone()),
            ("domain_file", print_domain(domain)),
            ("few_shot_PDDL_file_examples", few_shot_examples()),
            ("mission", mission(spec)),
            ("raw_state", s0.serialize()),
        ]),
    )?;
    let level = spec.id();
    ask_with_repair(
        client,
        Purpose::ProblemSynthesis,
        &level,
        &prompt,
        config.budgets.synthesis_repairs,
        |text| {
            let (_, problem) = parse_pddl_response(text)?;
            let problem = problem.ok_or("the answer contains no problem file")?;
            check_problem(domain, &problem, s0, config)?;
            Ok(problem)
        },
    )
}

/// Domain and problem for a new level. A non-empty library domain is tried
/// first with a problem-only prompt; full synthesis runs otherwise, or when
/// the library domain cannot express the level.
pub fn synthesize_abstractions(
    client: &mut LlmClient,
    spec: &EnvironmentSpec,
    s0: &RawState,
    library: &DomainAst,
    config: &AgentConfig,
) -> Result<Abstractions, AgentError> {
    if !library.is_empty() {
        match synthesize_problem(client, spec, s0, library, config) {
            Ok(problem) => {
                return Ok(Abstractions {
                    domain: library.clone(),
                    problem,
                    transferred: true,
                    changed_actions: Vec::new(),
                })
            }
            Err(AgentError::SynthesisExhausted { last, .. }) => {
                tracing::info!(level = %spec.id(), reason = %last, "library domain not transferable; synthesizing");
            }
            Err(e) => return Err(e),
        }
    }
    let current = if library.is_empty() {
        String::new()
    } else {
        print_domain(library)
    };
    let prompt = render(
        TemplateName::GeneratePddl,
        bindings([
            ("current_domain", current),
            ("domain_description", spec.description.clone()),
            ("few_shot_PDDL_file_examples", few_shot_examples()),
            ("raw_state", s0.serialize()),
        ]),
    )?;
    let level = spec.id();
    ask_with_repair(
        client,
        Purpose::AbstractionSynthesis,
        &level,
        &prompt,
        config.budgets.synthesis_repairs,
        |text| {
            let (domain, problem) = parse_pddl_response(text)?;
            let new = domain.ok_or("the answer contains no domain file")?;
            let problem = problem.ok_or("the answer contains no problem file")?;
            let mut merged = library.clone();
            let changed_actions = merged.merge(&new);
            check_problem(&merged, &problem, s0, config)?;
            Ok(Abstractions {
                domain: merged,
                problem,
                transferred: false,
                changed_actions,
            })
        },
    )
}

/// Prompt text for a list of transitions: action, prior state and change.
pub fn format_transitions(transitions: &[Transition]) -> String {
    let mut out = String::new();
    for (i, t) in transitions.iter().enumerate() {
        out.push_str(&format!(
            "transition {}\nstate:\n{}action: {}\nchange:\n{}\n",
            i + 1,
            t.before.serialize(),
            t.action,
            t.delta()
        ));
    }
    out
}

fn actions_set(spec: &EnvironmentSpec) -> String {
    spec.action_space()
        .iter()
        .map(|a| a.as_str())
        .collect::<Vec<_>>()
        .join(", ")
}

/// First code block that parses as a transition model and reproduces every
/// observed transition.
fn accept_model(text: &str, observed: &[&Transition], config: &AgentConfig) -> Result<TransitionProgram, String> {
    let blocks = extract_code_blocks_any(text, CODE_TAGS);
    if blocks.is_empty() {
        return Err("the answer contains no ```wmdsl code block".into());
    }
    let mut last = String::new();
    for block in blocks {
        let program = match TransitionProgram::parse(&block) {
            Ok(p) => p,
            Err(e) => {
                last = format!("the model does not parse: {e}");
                continue;
            }
        };
        let errors = model_errors(&program, observed.iter().copied(), &config.limits);
        if errors.is_empty() {
            return Ok(program);
        }
        last = format!(
            "the model mispredicts {} observed transition(s), for example:\n{}",
            errors.len(),
            errors[0].describe()
        );
    }
    Err(last)
}

/// Initial transition model from random exploration. Accepted only if it
/// reproduces every observed transition.
pub fn synthesize_world_model(
    client: &mut LlmClient,
    spec: &EnvironmentSpec,
    s0: &RawState,
    buffers: &ReplayBuffers,
    config: &AgentConfig,
) -> Result<TransitionProgram, AgentError> {
    if buffers.r_random.is_empty() {
        return Err(AgentError::Precondition(
            "world-model synthesis needs random transitions".into(),
        ));
    }
    let n = config.budgets.prompt_transitions.clamp(1, buffers.r_random.len());
    let shown = &buffers.r_random[buffers.r_random.len() - n..];
    let prompt = render(
        TemplateName::WorldModel,
        bindings([
            ("actions_set", actions_set(spec)),
            ("current_state", s0.serialize()),
            ("domain_description", spec.description.clone()),
            ("errors_from_world_model", format_transitions(shown)),
            ("num_random_actions", n.to_string()),
            ("utils", utils_text()),
        ]),
    )?;
    let observed: Vec<&Transition> = buffers.observed().collect();
    ask_with_repair(
        client,
        Purpose::WorldModelSynthesis,
        &spec.id(),
        &prompt,
        config.budgets.synthesis_repairs,
        |text| accept_model(text, &observed, config),
    )
}

/// Asks for a corrected model from the prediction errors. Every prompt,
/// accepted or not, counts against `budget`.
pub fn revise_world_model(
    client: &mut LlmClient,
    spec: &EnvironmentSpec,
    model: &TransitionProgram,
    buffers: &ReplayBuffers,
    config: &AgentConfig,
    budget: usize,
) -> Result<Revision, AgentError> {
    let errors = model_errors(model, buffers.observed(), &config.limits);
    if errors.is_empty() {
        return Err(AgentError::Precondition(
            "the model already reproduces every observed transition".into(),
        ));
    }
    if budget == 0 {
        return Err(AgentError::RevisionExhausted { budget });
    }
    let described: Vec<String> = errors.iter().take(MAX_ERRORS_IN_PROMPT).map(|e| e.describe()).collect();
    let prompt = render(
        TemplateName::ReviseWorldModel,
        bindings([
            ("actions_set", actions_set(spec)),
            ("domain_description", spec.description.clone()),
            ("prediction_errors", described.join("\n")),
            ("utils", utils_text()),
            ("world_model", model.source().trim_end().to_string()),
        ]),
    )?;
    let observed: Vec<&Transition> = buffers.observed().collect();
    let mut attempts = 0;
    let result = ask_with_repair(client, Purpose::Revision, &spec.id(), &prompt, budget - 1, |text| {
        attempts += 1;
        accept_model(text, &observed, config)
    });
    match result {
        Ok(program) => Ok(Revision { program, attempts }),
        Err(AgentError::SynthesisExhausted { last, .. }) => {
            tracing::info!(level = %spec.id(), reason = %last, "revision budget spent");
            Err(AgentError::RevisionExhausted { budget })
        }
        Err(e) => Err(e),
    }
}

/// Why a parsed classifier is unusable, judged on probe states.
fn probe(program: &PredicateProgram, config: &AgentConfig) -> Result<(), String> {
    let args: Vec<String> = (0..program.arity()).map(|i| format!("absent{i}")).collect();
    match run_predicate(program, &RawState::new(), &args, &config.limits) {
        Ok(false) => Ok(()),
        Ok(true) => Err(format!(
            "`{}` returns True for objects that are not in the state; it must return False",
            program.predicate()
        )),
        Err(e) => Err(format!("`{}` did not finish: {e}", program.predicate())),
    }
}

/// Classifiers for every domain predicate that `existing` does not cover.
/// Predicates still missing after the repair budget are reported as
/// ungrounded rather than failing the call.
#[allow(clippy::too_many_arguments)]
pub fn synthesize_classifiers(
    client: &mut LlmClient,
    spec: &EnvironmentSpec,
    s0: &RawState,
    domain: &DomainAst,
    problem: &ProblemAst,
    model: &TransitionProgram,
    existing: &BTreeMap<String, PredicateProgram>,
    config: &AgentConfig,
) -> Result<ClassifierSet, AgentError> {
    let mut set = ClassifierSet {
        programs: existing.clone(),
        ..Default::default()
    };
    let mut needed: Vec<(String, usize)> = domain
        .predicates
        .iter()
        .filter(|p| !existing.contains_key(&p.name))
        .map(|p| (p.name.clone(), p.arity()))
        .collect();
    if needed.is_empty() {
        return Ok(set);
    }
    let prompt = render(
        TemplateName::Predicates,
        bindings([
            ("domain_file", print_domain(domain)),
            ("game_description", spec.description.clone()),
            ("problem_file", print_problem(problem)),
            ("raw_state", s0.serialize()),
            ("world_model", model.source().to_string()),
        ]),
    )?;
    let level = spec.id();
    let mut text = prompt.clone();
    let mut any_parsed = false;
    let mut last = String::new();
    for _ in 0..=config.budgets.synthesis_repairs {
        let reply = client.complete(Purpose::ClassifierSynthesis, &level, &text)?;
        let blocks = extract_code_blocks_any(&reply.response, CODE_TAGS);
        let mut problems: Vec<String> = Vec::new();
        if blocks.is_empty() {
            problems.push("the answer contains no ```wmdsl code block".into());
        } else {
            match parse_predicates(&blocks.join("\n\n"), &needed) {
                Err(e) => problems.push(format!("the code does not parse: {e}")),
                Ok((found, missing)) => {
                    any_parsed = true;
                    for prog in found {
                        match probe(&prog, config) {
                            Ok(()) => {
                                set.synthesized.push(prog.predicate().to_string());
                                set.programs.insert(prog.predicate().to_string(), prog);
                            }
                            Err(e) => problems.push(e),
                        }
                    }
                    problems.extend(missing.into_iter().map(|(name, e)| format!("`{name}`: {e}")));
                }
            }
        }
        needed.retain(|(name, _)| !set.programs.contains_key(name));
        if needed.is_empty() {
            return Ok(set);
        }
        last = problems.join("\n");
        tracing::info!(level = %level, missing = needed.len(), "classifier response incomplete");
        text = format!("{prompt}{}", repair_suffix(&last)?);
    }
    if !any_parsed {
        return Err(AgentError::SynthesisExhausted {
            what: Purpose::ClassifierSynthesis.to_string(),
            attempts: config.budgets.synthesis_repairs + 1,
            last,
        });
    }
    set.ungrounded = needed.into_iter().map(|(n, _)| n).collect();
    tracing::warn!(level = %level, ungrounded = ?set.ungrounded, "predicates left without classifiers");
    Ok(set)
}
