use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use super::{bfs_subgoal, execute_and_check, AgentConfig, AgentError, ReplayBuffers};
use crate::envs::Environment;
use crate::pddl::GroundedOperator;
use crate::state::Transition;
use crate::wmdsl::{PredicateProgram, TransitionProgram};

/// Most untried operators probed in one fallback round.
const MAX_PROBES: usize = 16;

/// `n` uniformly random actions from the reset state. The environment is
/// reset whenever an episode ends and once more at the end.
pub fn explore_random(env: &mut Environment, n: usize, rng: &mut impl Rng) -> Result<Vec<Transition>, AgentError> {
    if n == 0 {
        return Err(AgentError::Precondition(
            "random exploration needs at least one step".into(),
        ));
    }
    let actions = env.spec.actions.clone();
    let mut out = Vec::with_capacity(n);
    env.reset();
    for _ in 0..n {
        if env.state().terminated() {
            env.reset();
        }
        let a = actions
            .choose(rng)
            .ok_or_else(|| AgentError::Precondition("empty action space".into()))?;
        let before = env.state().raw.clone();
        let after = env.step(a)?.raw.clone();
        out.push(Transition::new(before, a.clone(), after));
    }
    env.reset();
    Ok(out)
}

/// One fallback round: a random batch into `r_random`, then a subgoal
/// attempt for each operator not yet tried, recorded in `r_p`/`r_a`.
/// Returns the number of new observed transitions.
#[allow(clippy::too_many_arguments)]
pub fn explore_fallback(
    env: &mut Environment,
    operators: &[GroundedOperator],
    tried: &BTreeSet<String>,
    model: &TransitionProgram,
    classifiers: &BTreeMap<String, PredicateProgram>,
    buffers: &mut ReplayBuffers,
    rng: &mut impl Rng,
    config: &AgentConfig,
) -> Result<usize, AgentError> {
    let random = explore_random(env, config.budgets.fallback_steps.max(1), rng)?;
    let mut added = random.len();
    buffers.r_random.extend(random);
    let agent_key = env.spec.agent_key();
    let actions = env.spec.actions.clone();
    let untried = operators
        .iter()
        .filter(|op| !tried.contains(&op.tag()))
        .filter(|op| op.effect.iter().all(|l| classifiers.contains_key(&l.predicate)))
        .take(MAX_PROBES);
    for op in untried {
        env.reset();
        let start = env.state().raw.clone();
        let path = match bfs_subgoal(
            &start,
            model,
            op,
            classifiers,
            &actions,
            Some(agent_key),
            &config.limits,
            config.budgets.bfs_nodes,
        ) {
            Ok(p) => p,
            Err(e) => {
                tracing::debug!(operator = %op, error = %e, "probe found no path");
                continue;
            }
        };
        let before = buffers.r_a.len();
        match execute_and_check(env, &path, op, classifiers, buffers, &config.limits) {
            Ok(out) => tracing::debug!(operator = %op, effects = out.effects_hold, "probe executed"),
            Err(e) => tracing::debug!(operator = %op, error = %e, "probe ended early"),
        }
        added += buffers.r_a.len() - before;
    }
    env.reset();
    Ok(added)
}
