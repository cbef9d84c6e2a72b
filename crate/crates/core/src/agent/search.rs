use std::collections::{BTreeMap, HashMap, VecDeque};

use super::AgentError;
use crate::pddl::{GroundedOperator, Literal};
use crate::state::{Action, RawState, Transition};
use crate::wmdsl::{run_predicate, run_transition, Limits, PredicateProgram, TransitionProgram};

/// Evaluates ground literals with the classifiers; negated literals must be false.
pub fn literals_hold(
    state: &RawState,
    literals: &[Literal],
    classifiers: &BTreeMap<String, PredicateProgram>,
    limits: &Limits,
) -> Result<bool, AgentError> {
    for l in literals {
        let prog = classifiers
            .get(&l.predicate)
            .ok_or_else(|| AgentError::UngroundedPredicate(l.predicate.clone()))?;
        let v = run_predicate(prog, state, &l.args, limits).map_err(AgentError::Classifier)?;
        if v == l.negated {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Breadth-first search over model-predicted states. Actions are tried in
/// the given order, so the returned path is the first shortest one.
/// Predicted states lacking `agent_key` (a predicted death) are not expanded.
pub fn bfs<G>(
    start: &RawState,
    model: &TransitionProgram,
    actions: &[Action],
    agent_key: Option<&str>,
    limits: &Limits,
    max_nodes: usize,
    mut goal: G,
) -> Result<Vec<Transition>, AgentError>
where
    G: FnMut(&RawState) -> Result<bool, AgentError>,
{
    if goal(start)? {
        return Ok(Vec::new());
    }
    let mut parent: HashMap<RawState, Option<(RawState, usize)>> = HashMap::new();
    parent.insert(start.clone(), None);
    let mut queue = VecDeque::from([start.clone()]);
    let mut faults = 0usize;
    while let Some(s) = queue.pop_front() {
        for (ai, a) in actions.iter().enumerate() {
            let next = match run_transition(model, &s, a, limits) {
                Ok(n) => n,
                Err(e) => {
                    faults += 1;
                    tracing::trace!(error = %e, "model fault during search");
                    continue;
                }
            };
            if parent.contains_key(&next) {
                continue;
            }
            if parent.len() >= max_nodes {
                return Err(AgentError::NodeBudget { max_nodes });
            }
            parent.insert(next.clone(), Some((s.clone(), ai)));
            if goal(&next)? {
                let mut path = Vec::new();
                let mut cur = next;
                while let Some(Some((prev, ai))) = parent.get(&cur) {
                    path.push(Transition::new(prev.clone(), actions[*ai].clone(), cur.clone()));
                    cur = prev.clone();
                }
                path.reverse();
                return Ok(path);
            }
            if agent_key.is_none_or(|k| next.contains(k)) {
                queue.push_back(next);
            }
        }
    }
    if faults > 0 {
        tracing::debug!(faults, "search frontier exhausted with model faults");
    }
    Err(AgentError::SubgoalUnreachable { explored: parent.len() })
}

/// Shortest predicted action sequence from `s` to a state where every
/// effect literal of `omega` holds. The returned transitions are tagged
/// with the operator.
#[allow(clippy::too_many_arguments)]
pub fn bfs_subgoal(
    s: &RawState,
    model: &TransitionProgram,
    omega: &GroundedOperator,
    classifiers: &BTreeMap<String, PredicateProgram>,
    actions: &[Action],
    agent_key: Option<&str>,
    limits: &Limits,
    max_nodes: usize,
) -> Result<Vec<Transition>, AgentError> {
    if let Some(l) = omega.effect.iter().find(|l| !classifiers.contains_key(&l.predicate)) {
        return Err(AgentError::UngroundedPredicate(l.predicate.clone()));
    }
    let tag = omega.tag();
    let path = bfs(s, model, actions, agent_key, limits, max_nodes, |st| {
        literals_hold(st, &omega.effect, classifiers, limits)
    })?;
    Ok(path.into_iter().map(|t| t.tagged(tag.clone())).collect())
}
