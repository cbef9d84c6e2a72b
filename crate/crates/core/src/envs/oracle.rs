use std::collections::{HashMap, VecDeque};

use crate::state::{Action, RawState};

use super::{reset, true_transition, EnvError, EnvironmentSpec};

pub const DEFAULT_ORACLE_NODES: usize = 500_000;

/// Shortest winning action sequence under the true dynamics, by
/// breadth-first search. Lost states are not expanded.
pub fn oracle_solve(spec: &EnvironmentSpec, seed: u64, max_nodes: usize) -> Result<Vec<Action>, EnvError> {
    let start = reset(spec, seed)?;
    if start.won {
        return Ok(Vec::new());
    }
    let mut parent: HashMap<RawState, Option<(RawState, usize)>> = HashMap::new();
    parent.insert(start.raw.clone(), None);
    let mut queue = VecDeque::from([start.raw]);
    while let Some(s) = queue.pop_front() {
        for (ai, a) in spec.actions.iter().enumerate() {
            let next = true_transition(spec, &s, a);
            if parent.contains_key(&next) {
                continue;
            }
            if parent.len() >= max_nodes {
                return Err(EnvError::OracleBudget(max_nodes));
            }
            parent.insert(next.clone(), Some((s.clone(), ai)));
            if spec.is_won(&next) {
                let mut plan = Vec::new();
                let mut cur = next;
                while let Some(Some((prev, ai))) = parent.get(&cur) {
                    plan.push(spec.actions[*ai].clone());
                    cur = prev.clone();
                }
                plan.reverse();
                return Ok(plan);
            }
            if !spec.is_lost(&next) {
                queue.push_back(next);
            }
        }
    }
    Err(EnvError::OracleUnsolvable)
}
