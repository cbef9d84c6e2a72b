use std::collections::{BTreeSet, HashMap, VecDeque};

use super::ast::*;
use super::ground::{ground, GroundedOperator};
use super::PlanError;

pub const DEFAULT_MAX_NODES: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HighLevelPlan {
    pub steps: Vec<GroundedOperator>,
}

impl HighLevelPlan {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn last(&self) -> Option<&GroundedOperator> {
        self.steps.last()
    }
}

impl std::fmt::Display for HighLevelPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for s in &self.steps {
            writeln!(f, "({} {})", s.schema, s.args.join(" "))?;
        }
        Ok(())
    }
}

/// Fixed-width bitset over interned ground atoms.
#[derive(Clone, PartialEq, Eq, Hash)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64).max(1)])
    }
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn clear(&mut self, i: usize) {
        self.0[i / 64] &= !(1 << (i % 64));
    }
    fn get(&self, i: usize) -> bool {
        self.0[i / 64] & (1 << (i % 64)) != 0
    }
}

struct CompiledOp {
    pre_pos: Vec<usize>,
    pre_neg: Vec<usize>,
    add: Vec<usize>,
    del: Vec<usize>,
}

#[derive(Default)]
struct Interner {
    ids: HashMap<Atom, usize>,
}

impl Interner {
    fn id(&mut self, atom: Atom) -> usize {
        let n = self.ids.len();
        *self.ids.entry(atom).or_insert(n)
    }
}

/// Shortest plan under unit action cost by breadth-first search over
/// literal sets. Ties break by grounded-operator order.
pub fn plan(domain: &DomainAst, problem: &ProblemAst, max_nodes: usize) -> Result<HighLevelPlan, PlanError> {
    let ops = ground(domain, problem);
    plan_with_operators(problem, ops, max_nodes)
}

pub fn plan_with_operators(
    problem: &ProblemAst,
    ops: Vec<GroundedOperator>,
    max_nodes: usize,
) -> Result<HighLevelPlan, PlanError> {
    let mut interner = Interner::default();
    let compiled: Vec<CompiledOp> = ops
        .iter()
        .map(|op| {
            let mut c = CompiledOp {
                pre_pos: Vec::new(),
                pre_neg: Vec::new(),
                add: Vec::new(),
                del: Vec::new(),
            };
            for l in &op.precondition {
                let id = interner.id(l.atom());
                if l.negated {
                    c.pre_neg.push(id)
                } else {
                    c.pre_pos.push(id)
                }
            }
            for l in &op.effect {
                let id = interner.id(l.atom());
                if l.negated {
                    c.del.push(id)
                } else {
                    c.add.push(id)
                }
            }
            c
        })
        .collect();
    let init_ids: Vec<usize> = problem.init.iter().map(|a| interner.id(a.clone())).collect();
    let goal: Vec<(usize, bool)> = problem
        .goals
        .iter()
        .map(|l| (interner.id(l.atom()), l.negated))
        .collect();

    let n_atoms = interner.ids.len();
    let mut init = Bits::new(n_atoms);
    for i in init_ids {
        init.set(i);
    }
    let satisfied = |s: &Bits| goal.iter().all(|&(id, neg)| s.get(id) != neg);
    if satisfied(&init) {
        return Ok(HighLevelPlan { steps: Vec::new() });
    }

    // parent pointers: state index -> (parent index, op index)
    let mut states: Vec<Bits> = vec![init.clone()];
    let mut parent: Vec<(usize, usize)> = vec![(usize::MAX, usize::MAX)];
    let mut seen: HashMap<Bits, usize> = HashMap::new();
    seen.insert(init, 0);
    let mut queue = VecDeque::from([0usize]);

    while let Some(idx) = queue.pop_front() {
        for (oi, op) in compiled.iter().enumerate() {
            let s = &states[idx];
            if !op.pre_pos.iter().all(|&i| s.get(i)) || op.pre_neg.iter().any(|&i| s.get(i)) {
                continue;
            }
            let mut next = s.clone();
            for &i in &op.del {
                next.clear(i);
            }
            for &i in &op.add {
                next.set(i);
            }
            if seen.contains_key(&next) {
                continue;
            }
            if states.len() >= max_nodes {
                return Err(PlanError::ResourceLimit { max_nodes });
            }
            let new_idx = states.len();
            let done = satisfied(&next);
            seen.insert(next.clone(), new_idx);
            states.push(next);
            parent.push((idx, oi));
            if done {
                let mut steps = Vec::new();
                let mut cur = new_idx;
                while parent[cur].0 != usize::MAX {
                    steps.push(ops[parent[cur].1].clone());
                    cur = parent[cur].0;
                }
                steps.reverse();
                let plan = HighLevelPlan { steps };
                if !simulate(problem, &plan) {
                    return Err(PlanError::Internal("emitted plan failed STRIPS validation".into()));
                }
                return Ok(plan);
            }
            queue.push_back(new_idx);
        }
    }
    Err(PlanError::Unsolvable { explored: states.len() })
}

/// Executes `plan` under STRIPS add/delete semantics from the problem's
/// initial state; true when every step is applicable and every goal holds.
pub fn simulate(problem: &ProblemAst, plan: &HighLevelPlan) -> bool {
    let mut state: BTreeSet<Atom> = problem.init.iter().cloned().collect();
    for op in &plan.steps {
        let applicable = op.precondition.iter().all(|l| state.contains(&l.atom()) != l.negated);
        if !applicable {
            return false;
        }
        for l in op.effect.iter().filter(|l| l.negated) {
            state.remove(&l.atom());
        }
        for l in op.effect.iter().filter(|l| !l.negated) {
            state.insert(l.atom());
        }
    }
    problem.goals.iter().all(|l| state.contains(&l.atom()) != l.negated)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::{parse_domain, parse_problem};

    const TOY: &str = "(define (domain toy-domain) (:requirements :strips :typing) (:types object)
      (:predicates (ontop ?x - object ?y - object))
      (:action placeontopof :parameters (?obj1 - object ?obj2 - object)
        :precondition (not (ontop ?obj1 ?obj2)) :effect (ontop ?obj1 ?obj2)))";

    #[test]
    fn toy_problem_is_one_step() {
        let d = parse_domain(TOY).unwrap();
        let p = parse_problem(
            "(define (problem toy-problem) (:domain toy-domain) (:objects table mug - object)
              (:init (not (ontop mug table))) (:goal (ontop mug table)))",
        )
        .unwrap();
        let plan = plan(&d, &p, DEFAULT_MAX_NODES).unwrap();
        assert_eq!(plan.len(), 1);
        assert_eq!(plan.steps[0].to_string(), "placeontopof(mug, table)");
    }

    #[test]
    fn goal_already_true_gives_empty_plan() {
        let d = parse_domain(TOY).unwrap();
        let p = parse_problem(
            "(define (problem t) (:domain toy-domain) (:objects table mug) (:init (ontop mug table)) (:goal (ontop mug table)))",
        )
        .unwrap();
        assert!(plan(&d, &p, 10).unwrap().is_empty());
    }

    #[test]
    fn unsolvable_and_budget() {
        let d = parse_domain(
            "(define (domain d) (:predicates (a) (b) (c))
              (:action ab :parameters () :precondition (a) :effect (b))
              (:action bc :parameters () :precondition (b) :effect (c)))",
        )
        .unwrap();
        let unsolvable = parse_problem("(define (problem p) (:domain d) (:init) (:goal (c)))").unwrap();
        assert!(matches!(plan(&d, &unsolvable, 100), Err(PlanError::Unsolvable { .. })));
        let solvable = parse_problem("(define (problem p) (:domain d) (:init (a)) (:goal (c)))").unwrap();
        assert_eq!(plan(&d, &solvable, 100).unwrap().len(), 2);
        assert!(matches!(plan(&d, &solvable, 2), Err(PlanError::ResourceLimit { .. })));
    }

    #[test]
    fn negative_goals_and_deletes() {
        let d = parse_domain(
            "(define (domain d) (:predicates (on) (lit))
              (:action flip :parameters () :precondition (on) :effect (and (not (on)) (lit))))",
        )
        .unwrap();
        let p = parse_problem("(define (problem p) (:domain d) (:init (on)) (:goal (and (lit) (not (on)))))").unwrap();
        let pl = plan(&d, &p, 100).unwrap();
        assert_eq!(pl.len(), 1);
        assert!(simulate(&p, &pl));
    }
}
