//! The bi-level agent: abstraction and model synthesis through the LLM
//! client, operator-level planning, per-subgoal search in the learned
//! model, checked execution, revision from prediction errors and an
//! exploration fallback.

mod buffers;
mod episode;
mod explore;
mod library;
mod search;
mod synth;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envs::EnvError;
use crate::llm::LlmError;
use crate::wmdsl::{EvalError, Limits};

pub use buffers::{model_errors, ModelError, ReplayBuffers};
pub use episode::{execute_and_check, solve_level, CheckOutcome, EpisodeResult};
pub use explore::{explore_fallback, explore_random};
pub use library::{AbstractionLibrary, Provenance};
pub use search::{bfs, bfs_subgoal, literals_hold};
pub use synth::{
    format_transitions, revise_world_model, split_pddl_forms, synthesize_abstractions, synthesize_classifiers,
    synthesize_problem, synthesize_world_model, Abstractions, ClassifierSet, Revision,
};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("{what}: no usable response after {attempts} attempts ({last})")]
    SynthesisExhausted {
        what: String,
        attempts: usize,
        last: String,
    },
    #[error("predicate `{0}` has no classifier")]
    UngroundedPredicate(String),
    #[error("subgoal unreachable after exploring {explored} predicted states")]
    SubgoalUnreachable { explored: usize },
    #[error("search exceeded {max_nodes} nodes")]
    NodeBudget { max_nodes: usize },
    #[error("environment terminated with a loss after {steps} steps")]
    EnvironmentTerminated { steps: u64 },
    #[error("no accepted revision within {budget} attempts")]
    RevisionExhausted { budget: usize },
    #[error("exploration fallback budget of {budget} spent")]
    ExplorationExhausted { budget: usize },
    #[error("classifier evaluation failed: {0}")]
    Classifier(EvalError),
    #[error("llm: {0}")]
    Llm(#[from] LlmError),
    #[error("environment: {0}")]
    Env(#[from] EnvError),
    #[error("library: {0}")]
    Library(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl AgentError {
    /// Failures of the language-model service or replay, as opposed to the
    /// agent failing at the task.
    pub fn is_infrastructure(&self) -> bool {
        matches!(
            self,
            AgentError::Llm(LlmError::Service { .. })
                | AgentError::Llm(LlmError::CassetteMismatch { .. })
                | AgentError::Llm(LlmError::CassetteExhausted { .. })
                | AgentError::Llm(LlmError::Cassette(_))
                | AgentError::Llm(LlmError::Config(_))
                | AgentError::Library(_)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    /// Library threaded through the curriculum.
    #[default]
    Full,
    /// Every episode starts from blank abstractions.
    NoCurriculum,
    /// No abstractions: search the learned model directly for the win condition.
    Flat,
}

impl RunMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RunMode::Full => "full",
            RunMode::NoCurriculum => "no-curriculum",
            RunMode::Flat => "flat",
        }
    }
}

impl fmt::Display for RunMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RunMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(RunMode::Full),
            "no-curriculum" => Ok(RunMode::NoCurriculum),
            "flat" => Ok(RunMode::Flat),
            other => Err(format!("unknown mode `{other}` (expected full, no-curriculum or flat)")),
        }
    }
}

/// Per-level bounds. Every loop in the agent is capped by one of these.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budgets {
    /// Repair prompts after an unusable response.
    pub synthesis_repairs: usize,
    /// Revision prompts per level.
    pub revisions: usize,
    /// Exploration fallback rounds per level.
    pub exploration_loops: usize,
    /// Node cap for low-level search.
    pub bfs_nodes: usize,
    /// Node cap for high-level planning.
    pub plan_nodes: usize,
    /// Random actions before the first world model.
    pub random_steps: usize,
    /// Random actions per exploration fallback round.
    pub fallback_steps: usize,
    /// Most recent random transitions shown in the world-model prompt.
    pub prompt_transitions: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            synthesis_repairs: 3,
            revisions: 5,
            exploration_loops: 3,
            bfs_nodes: 200_000,
            plan_nodes: crate::pddl::DEFAULT_MAX_NODES,
            random_steps: 20,
            fallback_steps: 30,
            prompt_transitions: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub mode: RunMode,
    pub budgets: Budgets,
    pub limits: Limits,
    /// Seeds the exploration RNG together with the level seed.
    pub seed: u64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            mode: RunMode::Full,
            budgets: Budgets::default(),
            limits: Limits::default(),
            seed: 0,
        }
    }
}

#[cfg(test)]
mod tests;
