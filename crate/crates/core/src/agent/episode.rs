use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    bfs, bfs_subgoal, explore_fallback, explore_random, literals_hold, model_errors, revise_world_model,
    synthesize_abstractions, synthesize_classifiers, synthesize_problem, synthesize_world_model, AbstractionLibrary,
    AgentConfig, AgentError, ReplayBuffers, RunMode,
};
use crate::envs::{Environment, EnvironmentSpec};
use crate::llm::{LlmClient, Purpose, TokenUsage};
use crate::pddl::{ground, plan_with_operators, DomainAst, GroundedOperator, ProblemAst};
use crate::state::Transition;
use crate::wmdsl::{Limits, PredicateProgram, TransitionProgram};

/// Tag on transitions executed in flat mode, which has no operators.
const FLAT_TAG: &str = "win";

/// Metrics for one level. Wall time and service latency are kept out of
/// reports unless asked for, since they vary between runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub episode: usize,
    pub level: String,
    pub family: String,
    pub seed: u64,
    pub mode: RunMode,
    /// The environment reported a win. Never inferred from the model.
    pub solved: bool,
    /// Won on the first high-level plan, before any revision or fallback.
    pub first_plan_success: bool,
    /// Actions executed from the last reset.
    pub plan: Vec<String>,
    /// Operator tags of the last high-level plan.
    pub high_level_plan: Vec<String>,
    /// Every environment step, exploration included.
    pub env_steps: u64,
    /// Tokens by purpose; every purpose is present.
    pub usage: BTreeMap<Purpose, TokenUsage>,
    pub exchanges: usize,
    /// Accepted revisions.
    pub revisions: usize,
    /// Revision prompts, accepted or not.
    pub revision_attempts: usize,
    /// Exploration fallback rounds.
    pub explorations: usize,
    pub transferred_domain: bool,
    pub transferred_world_model: bool,
    pub ungrounded: Vec<String>,
    /// Disagreements between the final operator's effects and the win flag.
    pub grounding_defects: usize,
    pub failure: Option<String>,
    /// The failure came from the language-model service or replay.
    pub infrastructure_error: bool,
    pub domain_hash_start: String,
    pub domain_hash_end: String,
    #[serde(default)]
    pub wall_time_ms: u64,
    #[serde(default)]
    pub llm_latency_ms: u64,
}

impl EpisodeResult {
    pub(crate) fn new(spec: &EnvironmentSpec, seed: u64, mode: RunMode, episode: usize) -> Self {
        EpisodeResult {
            episode,
            level: spec.id(),
            family: spec.family.as_str().to_string(),
            seed,
            mode,
            solved: false,
            first_plan_success: false,
            plan: Vec::new(),
            high_level_plan: Vec::new(),
            env_steps: 0,
            usage: Purpose::ALL.into_iter().map(|p| (p, TokenUsage::default())).collect(),
            exchanges: 0,
            revisions: 0,
            revision_attempts: 0,
            explorations: 0,
            transferred_domain: false,
            transferred_world_model: false,
            ungrounded: Vec::new(),
            grounding_defects: 0,
            failure: None,
            infrastructure_error: false,
            domain_hash_start: String::new(),
            domain_hash_end: String::new(),
            wall_time_ms: 0,
            llm_latency_ms: 0,
        }
    }

    pub fn tokens(&self, purpose: Purpose) -> TokenUsage {
        self.usage.get(&purpose).copied().unwrap_or_default()
    }

    pub fn total_tokens(&self) -> TokenUsage {
        self.usage.values().fold(TokenUsage::default(), |a, u| a + *u)
    }
}

/// Result of executing one subgoal's actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckOutcome {
    /// Every effect literal holds in the real state reached.
    pub effects_hold: bool,
    pub won: bool,
    pub executed: usize,
}

/// Steps the environment through `predicted`, pushing each prediction and
/// observation to `r_p`/`r_a` together. Stops early on a win; a loss is
/// reported as [`AgentError::EnvironmentTerminated`] after recording.
fn run_actions(
    env: &mut Environment,
    predicted: &[Transition],
    tag: &str,
    buffers: &mut ReplayBuffers,
) -> Result<usize, AgentError> {
    let mut executed = 0;
    for p in predicted {
        if env.state().won {
            break;
        }
        let before = env.state().raw.clone();
        let after = env.step(&p.action)?;
        executed += 1;
        let lost = after.lost;
        let observed = Transition::new(before, p.action.clone(), after.raw.clone()).tagged(tag);
        buffers.r_p.push(p.clone().tagged(tag));
        buffers.r_a.push(observed);
        if lost {
            return Err(AgentError::EnvironmentTerminated {
                steps: env.state().steps,
            });
        }
    }
    Ok(executed)
}

/// Executes a subgoal plan in the real environment and checks the
/// operator's effects on the state actually reached.
pub fn execute_and_check(
    env: &mut Environment,
    predicted: &[Transition],
    omega: &GroundedOperator,
    classifiers: &BTreeMap<String, PredicateProgram>,
    buffers: &mut ReplayBuffers,
    limits: &Limits,
) -> Result<CheckOutcome, AgentError> {
    let executed = run_actions(env, predicted, &omega.tag(), buffers)?;
    Ok(CheckOutcome {
        effects_hold: literals_hold(&env.state().raw, &omega.effect, classifiers, limits)?,
        won: env.state().won,
        executed,
    })
}

enum Pass {
    Won,
    Failed { reason: String, mismatch: bool },
}

struct Run<'a> {
    spec: &'a EnvironmentSpec,
    env: Environment,
    client: &'a mut LlmClient,
    lib: &'a mut AbstractionLibrary,
    config: &'a AgentConfig,
    result: &'a mut EpisodeResult,
    buffers: ReplayBuffers,
    rng: ChaCha8Rng,
}

impl Run<'_> {
    fn family(&self) -> &'static str {
        self.spec.family.as_str()
    }

    fn record(&mut self, kind: &str, name: &str) {
        let (episode, level) = (self.result.episode, self.result.level.clone());
        self.lib.record(episode, &level, kind, name);
    }

    fn failed(&self, reason: String, pass_start: usize) -> Pass {
        let mismatch = !self.buffers.mismatches_since(pass_start).is_empty();
        Pass::Failed { reason, mismatch }
    }

    fn revise(&mut self, model: &TransitionProgram) -> Result<TransitionProgram, AgentError> {
        let left = self
            .config
            .budgets
            .revisions
            .saturating_sub(self.result.revision_attempts);
        match revise_world_model(self.client, self.spec, model, &self.buffers, self.config, left) {
            Ok(rev) => {
                self.result.revision_attempts += rev.attempts;
                self.result.revisions += 1;
                self.lib
                    .world_models
                    .insert(self.family().to_string(), rev.program.clone());
                self.record("world_model", self.family());
                tracing::info!(level = %self.result.level, attempts = rev.attempts, "world model revised");
                Ok(rev.program)
            }
            Err(e) => {
                if matches!(e, AgentError::RevisionExhausted { .. }) {
                    self.result.revision_attempts = self.config.budgets.revisions;
                }
                Err(e)
            }
        }
    }

    /// The family's library model if it explains the new observations,
    /// a revision of it otherwise, or a freshly synthesized one.
    fn initial_model(&mut self) -> Result<TransitionProgram, AgentError> {
        if let Some(m) = self.lib.world_models.get(self.family()).cloned() {
            if model_errors(&m, self.buffers.observed(), &self.config.limits).is_empty() {
                self.result.transferred_world_model = true;
                return Ok(m);
            }
            match self.revise(&m) {
                Ok(p) => return Ok(p),
                Err(AgentError::RevisionExhausted { .. }) => {
                    tracing::info!(level = %self.result.level, "library model unusable; synthesizing");
                }
                Err(e) => return Err(e),
            }
        }
        let s0 = self.env.state().raw.clone();
        let m = synthesize_world_model(self.client, self.spec, &s0, &self.buffers, self.config)?;
        self.lib.world_models.insert(self.family().to_string(), m.clone());
        self.record("world_model", self.family());
        Ok(m)
    }

    fn explore_initial(&mut self) -> Result<(), AgentError> {
        let batch = explore_random(&mut self.env, self.config.budgets.random_steps, &mut self.rng)?;
        self.buffers.r_random.extend(batch);
        Ok(())
    }

    /// One high-level plan, refined and executed subgoal by subgoal from the reset state.
    fn attempt_plan(
        &mut self,
        domain: &DomainAst,
        problem: &ProblemAst,
        model: &TransitionProgram,
        classifiers: &BTreeMap<String, PredicateProgram>,
        tried: &mut BTreeSet<String>,
    ) -> Result<Pass, AgentError> {
        let ops: Vec<GroundedOperator> = ground(domain, problem)
            .into_iter()
            .filter(|op| op.effect.iter().all(|l| classifiers.contains_key(&l.predicate)))
            .collect();
        self.env.reset();
        let pass_start = self.buffers.r_a.len();
        self.result.plan.clear();
        let hl = match plan_with_operators(problem, ops, self.config.budgets.plan_nodes) {
            Ok(p) => p,
            Err(e) => return Ok(self.failed(format!("high-level planning failed: {e}"), pass_start)),
        };
        self.result.high_level_plan = hl.steps.iter().map(|o| o.tag()).collect();
        tracing::info!(level = %self.result.level, plan = ?self.result.high_level_plan, "high-level plan");
        for omega in &hl.steps {
            if self.env.state().won {
                break;
            }
            tried.insert(omega.tag());
            let s = self.env.state().raw.clone();
            let path = match bfs_subgoal(
                &s,
                model,
                omega,
                classifiers,
                &self.spec.actions,
                Some(self.spec.agent_key()),
                &self.config.limits,
                self.config.budgets.bfs_nodes,
            ) {
                Ok(p) => p,
                Err(e @ (AgentError::SubgoalUnreachable { .. } | AgentError::NodeBudget { .. })) => {
                    return Ok(self.failed(format!("subgoal {omega}: {e}"), pass_start));
                }
                Err(e) => return Err(e),
            };
            let from = self.buffers.r_a.len();
            let check = execute_and_check(
                &mut self.env,
                &path,
                omega,
                classifiers,
                &mut self.buffers,
                &self.config.limits,
            );
            let executed: Vec<String> = self.buffers.r_a[from..].iter().map(|t| t.action.to_string()).collect();
            self.result.plan.extend(executed);
            match check {
                Ok(c) if c.won => break,
                Ok(c) if !c.effects_hold => {
                    return Ok(self.failed(format!("effects of {omega} not observed"), pass_start));
                }
                Ok(_) => {}
                Err(e @ AgentError::EnvironmentTerminated { .. }) => {
                    return Ok(self.failed(format!("subgoal {omega}: {e}"), pass_start));
                }
                Err(e) => return Err(e),
            }
        }
        // Final check: the last operator's effects against the win flag.
        let won = self.env.state().won;
        let effects = match hl.last() {
            Some(last) => literals_hold(&self.env.state().raw, &last.effect, classifiers, &self.config.limits)?,
            None => true,
        };
        if won != effects {
            self.result.grounding_defects += 1;
            tracing::warn!(level = %self.result.level, won, effects, "final effects disagree with the win flag");
        }
        if won {
            Ok(Pass::Won)
        } else {
            Ok(self.failed("plan completed but the level is not won".into(), pass_start))
        }
    }

    /// One exploration fallback round; revises the model if the new
    /// observations contradict it.
    fn fallback(
        &mut self,
        operators: &[GroundedOperator],
        tried: &BTreeSet<String>,
        model: TransitionProgram,
        classifiers: &BTreeMap<String, PredicateProgram>,
    ) -> Result<TransitionProgram, AgentError> {
        let budget = self.config.budgets.exploration_loops;
        if self.result.explorations >= budget {
            return Err(AgentError::ExplorationExhausted { budget });
        }
        self.result.explorations += 1;
        explore_fallback(
            &mut self.env,
            operators,
            tried,
            &model,
            classifiers,
            &mut self.buffers,
            &mut self.rng,
            self.config,
        )?;
        if model_errors(&model, self.buffers.observed(), &self.config.limits).is_empty() {
            Ok(model)
        } else {
            self.revise(&model)
        }
    }

    fn full(&mut self) -> Result<(), AgentError> {
        let s0 = self.env.state().raw.clone();
        let abs = synthesize_abstractions(self.client, self.spec, &s0, &self.lib.domain, self.config)?;
        self.result.transferred_domain = abs.transferred;
        for a in &abs.changed_actions {
            self.record("operator", a);
        }
        self.lib.domain = abs.domain.clone();
        let domain = abs.domain;
        let mut problem = abs.problem;

        self.explore_initial()?;
        let mut model = self.initial_model()?;

        let existing = self.lib.classifiers_for(self.family());
        let set = synthesize_classifiers(
            self.client,
            self.spec,
            &s0,
            &domain,
            &problem,
            &model,
            &existing,
            self.config,
        )?;
        for p in &set.synthesized {
            self.record("classifier", p);
        }
        self.lib
            .classifiers
            .insert(self.family().to_string(), set.programs.clone());
        self.result.ungrounded = set.ungrounded;
        let classifiers = set.programs;

        let mut tried = BTreeSet::new();
        let mut first = true;
        loop {
            match self.attempt_plan(&domain, &problem, &model, &classifiers, &mut tried)? {
                Pass::Won => {
                    self.result.solved = true;
                    self.result.first_plan_success = first;
                    return Ok(());
                }
                Pass::Failed { reason, mismatch } => {
                    tracing::info!(level = %self.result.level, %reason, mismatch, "plan failed");
                    if mismatch {
                        model = self.revise(&model)?;
                    } else {
                        let operators = ground(&domain, &problem);
                        model = self.fallback(&operators, &tried, model, &classifiers)?;
                        problem = synthesize_problem(self.client, self.spec, &s0, &domain, self.config)?;
                    }
                }
            }
            first = false;
        }
    }

    /// Search the learned model straight for the win condition.
    fn flat(&mut self) -> Result<(), AgentError> {
        self.explore_initial()?;
        let mut model = self.initial_model()?;
        let (win, family) = (self.spec.win.clone(), self.spec.family);
        let mut first = true;
        loop {
            self.env.reset();
            let pass_start = self.buffers.r_a.len();
            self.result.plan.clear();
            let s = self.env.state().raw.clone();
            let searched = bfs(
                &s,
                &model,
                &self.spec.actions,
                Some(self.spec.agent_key()),
                &self.config.limits,
                self.config.budgets.bfs_nodes,
                |st| Ok(win.holds(family, st)),
            );
            let pass = match searched {
                Ok(path) => {
                    let from = self.buffers.r_a.len();
                    let run = run_actions(&mut self.env, &path, FLAT_TAG, &mut self.buffers);
                    let executed: Vec<String> = self.buffers.r_a[from..].iter().map(|t| t.action.to_string()).collect();
                    self.result.plan.extend(executed);
                    match run {
                        Ok(_) if self.env.state().won => Pass::Won,
                        Ok(_) => self.failed("predicted win not reached".into(), pass_start),
                        Err(e @ AgentError::EnvironmentTerminated { .. }) => self.failed(e.to_string(), pass_start),
                        Err(e) => return Err(e),
                    }
                }
                Err(e @ (AgentError::SubgoalUnreachable { .. } | AgentError::NodeBudget { .. })) => {
                    self.failed(e.to_string(), pass_start)
                }
                Err(e) => return Err(e),
            };
            match pass {
                Pass::Won => {
                    self.result.solved = true;
                    self.result.first_plan_success = first;
                    return Ok(());
                }
                Pass::Failed { reason, mismatch } => {
                    tracing::info!(level = %self.result.level, %reason, mismatch, "flat plan failed");
                    model = if mismatch {
                        self.revise(&model)?
                    } else {
                        self.fallback(&[], &BTreeSet::new(), model, &BTreeMap::new())?
                    };
                }
            }
            first = false;
        }
    }
}

/// Runs one level end to end. Failures of any kind end up in the result;
/// this never panics on agent or service errors. In no-curriculum mode
/// `library` is left untouched and a blank one is used instead.
pub fn solve_level(
    spec: &EnvironmentSpec,
    seed: u64,
    library: &mut AbstractionLibrary,
    client: &mut LlmClient,
    config: &AgentConfig,
    episode: usize,
) -> EpisodeResult {
    let started = Instant::now();
    let log_start = client.log().len();
    let mut result = EpisodeResult::new(spec, seed, config.mode, episode);
    let mut scratch = AbstractionLibrary::default();
    let lib = match config.mode {
        RunMode::NoCurriculum => &mut scratch,
        RunMode::Full | RunMode::Flat => library,
    };
    result.domain_hash_start = lib.domain_hash();
    let rng = ChaCha8Rng::seed_from_u64(config.seed ^ seed.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut steps = 0;
    let outcome = match Environment::new(spec.clone(), seed) {
        Err(e) => Err(AgentError::from(e)),
        Ok(env) => {
            let mut run = Run {
                spec,
                env,
                client: &mut *client,
                lib: &mut *lib,
                config,
                result: &mut result,
                buffers: ReplayBuffers::default(),
                rng,
            };
            let out = match config.mode {
                RunMode::Flat => run.flat(),
                RunMode::Full | RunMode::NoCurriculum => run.full(),
            };
            steps = (run.buffers.r_random.len() + run.buffers.r_a.len()) as u64;
            out
        }
    };
    if let Err(e) = outcome {
        tracing::warn!(level = %result.level, error = %e, "level not solved");
        result.infrastructure_error = e.is_infrastructure();
        result.failure = Some(e.to_string());
    }
    result.env_steps = steps;
    for x in &client.log()[log_start..] {
        *result.usage.entry(x.purpose).or_default() += x.usage;
        result.exchanges += 1;
        result.llm_latency_ms += x.latency_ms;
    }
    result.domain_hash_end = lib.domain_hash();
    result.wall_time_ms = started.elapsed().as_millis() as u64;
    result
}
