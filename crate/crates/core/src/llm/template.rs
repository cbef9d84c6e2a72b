use std::collections::{BTreeMap, BTreeSet};

use super::LlmError;

/// Built-in prompt templates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TemplateName {
    /// Domain and problem synthesis.
    GeneratePddl,
    /// Problem-only synthesis against an existing domain.
    Transfer,
    /// One classifier per domain predicate.
    Predicates,
    /// Initial transition model from random exploration.
    WorldModel,
    /// Transition model repair from prediction errors.
    ReviseWorldModel,
    /// Suffix appended when a response could not be parsed.
    Repair,
}

impl TemplateName {
    pub const ALL: [TemplateName; 6] = [
        TemplateName::GeneratePddl,
        TemplateName::Transfer,
        TemplateName::Predicates,
        TemplateName::WorldModel,
        TemplateName::ReviseWorldModel,
        TemplateName::Repair,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateName::GeneratePddl => "generate_pddl",
            TemplateName::Transfer => "transfer",
            TemplateName::Predicates => "predicates",
            TemplateName::WorldModel => "world_model",
            TemplateName::ReviseWorldModel => "revise_world_model",
            TemplateName::Repair => "repair",
        }
    }

    fn body(self) -> &'static str {
        match self {
            TemplateName::GeneratePddl => include_str!("../../prompts/generate_pddl.txt"),
            TemplateName::Transfer => include_str!("../../prompts/transfer.txt"),
            TemplateName::Predicates => include_str!("../../prompts/predicates.txt"),
            TemplateName::WorldModel => include_str!("../../prompts/world_model.txt"),
            TemplateName::ReviseWorldModel => include_str!("../../prompts/revise_world_model.txt"),
            TemplateName::Repair => include_str!("../../prompts/repair.txt"),
        }
    }

    pub fn template(self) -> PromptTemplate {
        PromptTemplate::new(self.as_str(), self.body())
    }
}

/// Text with `{name}` placeholders. Substitution is a single pass, so
/// braces inside bound values are never re-expanded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: String,
    pub body: String,
    required: BTreeSet<String>,
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Finds `{name}` spans; yields (start, end, name) with `end` exclusive.
fn placeholders(body: &str) -> Vec<(usize, usize, &str)> {
    let mut out = Vec::new();
    let mut i = 0;
    while let Some(off) = body[i..].find('{') {
        let start = i + off;
        let rest = &body[start + 1..];
        let len = rest.find(|c: char| !is_name_char(c)).unwrap_or(rest.len());
        if len > 0 && rest[len..].starts_with('}') {
            out.push((start, start + len + 2, &rest[..len]));
            i = start + len + 2;
        } else {
            i = start + 1;
        }
    }
    out
}

impl PromptTemplate {
    pub fn new(name: impl Into<String>, body: impl Into<String>) -> Self {
        let body = body.into();
        let required = placeholders(&body).into_iter().map(|(_, _, n)| n.to_string()).collect();
        PromptTemplate {
            name: name.into(),
            body,
            required,
        }
    }

    pub fn required(&self) -> &BTreeSet<String> {
        &self.required
    }

    pub fn render(&self, bindings: &BTreeMap<&str, String>) -> Result<String, LlmError> {
        if let Some(missing) = self.required.iter().find(|p| !bindings.contains_key(p.as_str())) {
            return Err(LlmError::MissingPlaceholder {
                template: self.name.clone(),
                placeholder: missing.clone(),
            });
        }
        let mut out = String::with_capacity(self.body.len());
        let mut last = 0;
        for (start, end, name) in placeholders(&self.body) {
            out.push_str(&self.body[last..start]);
            out.push_str(&bindings[name]);
            last = end;
        }
        out.push_str(&self.body[last..]);
        Ok(out)
    }
}

/// The three few-shot PDDL examples, in order, separated by blank lines.
pub fn few_shot_examples() -> String {
    [
        include_str!("../../prompts/few_shot_1.txt"),
        include_str!("../../prompts/few_shot_2.txt"),
        include_str!("../../prompts/few_shot_3.txt"),
    ]
    .join("\n")
}

/// Language primer plus the builtin catalog, bound to `{utils}`.
pub fn utils_text() -> String {
    format!(
        "{}{}",
        include_str!("../../prompts/wmdsl_primer.txt"),
        crate::wmdsl::render_catalog()
    )
}
