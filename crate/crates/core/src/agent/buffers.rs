use crate::state::{RawState, Transition};
use crate::wmdsl::{run_transition, EvalError, Limits, TransitionProgram};

/// Transition stores driving model revision.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReplayBuffers {
    /// Random exploration rollouts.
    pub r_random: Vec<Transition>,
    /// Model-predicted transitions along each executed subgoal plan.
    pub r_p: Vec<Transition>,
    /// Observed transitions for the same actions, index-aligned with `r_p`.
    pub r_a: Vec<Transition>,
}

impl ReplayBuffers {
    /// Indices `i >= from` where prediction and observation disagree.
    pub fn mismatches_since(&self, from: usize) -> Vec<usize> {
        debug_assert_eq!(self.r_p.len(), self.r_a.len());
        (from..self.r_p.len().min(self.r_a.len()))
            .filter(|&i| self.r_p[i] != self.r_a[i])
            .collect()
    }

    pub fn consistent(&self) -> bool {
        self.mismatches_since(0).is_empty()
    }

    /// Everything actually observed in the environment.
    pub fn observed(&self) -> impl Iterator<Item = &Transition> {
        self.r_random.iter().chain(self.r_a.iter())
    }
}

/// An observed transition the model gets wrong.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelError {
    pub transition: Transition,
    pub predicted: Result<RawState, EvalError>,
}

impl ModelError {
    /// Prompt-ready description: state, action, predicted and observed change.
    pub fn describe(&self) -> String {
        let t = &self.transition;
        let predicted = match &self.predicted {
            Ok(p) => t.before.diff(p).to_string(),
            Err(e) => format!("  (model failed: {e})\n"),
        };
        format!(
            "state before:\n{}action: {}\npredicted change:\n{}observed change:\n{}",
            t.before.serialize(),
            t.action,
            predicted,
            t.delta()
        )
    }
}

/// Observed transitions the model does not reproduce exactly, deduplicated.
pub fn model_errors<'a>(
    model: &TransitionProgram,
    observed: impl IntoIterator<Item = &'a Transition>,
    limits: &Limits,
) -> Vec<ModelError> {
    let mut out: Vec<ModelError> = Vec::new();
    for t in observed {
        let predicted = run_transition(model, &t.before, &t.action, limits);
        if predicted.as_ref().ok() == Some(&t.after) {
            continue;
        }
        let dup = out
            .iter()
            .any(|e| e.transition.before == t.before && e.transition.action == t.action);
        if !dup {
            let mut transition = t.clone();
            transition.operator_tag = None;
            out.push(ModelError { transition, predicted });
        }
    }
    out
}
