//! Hand-written world models against the simulator, over every state
//! reachable from the fixtures.

use std::collections::{HashSet, VecDeque};
use std::path::PathBuf;

use tbrl::envs::{load_level, reset, true_transition, EnvironmentSpec};
use tbrl::state::{Action, ObjectValue, Pos, RawState};
use tbrl::wmdsl::{run_transition, Limits, TransitionProgram};

fn level(rel: &str) -> EnvironmentSpec {
    load_level(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("levels").join(rel)).unwrap()
}

/// Breadth-first closure of the start state under the true dynamics.
fn reachable(spec: &EnvironmentSpec, seed: u64, cap: usize) -> Vec<RawState> {
    let start = reset(spec, seed).unwrap().raw;
    let mut seen = HashSet::from([start.clone()]);
    let mut order = vec![start.clone()];
    let mut queue = VecDeque::from([start]);
    while let Some(s) = queue.pop_front() {
        for a in spec.action_space() {
            let n = true_transition(spec, &s, a);
            if seen.insert(n.clone()) {
                assert!(seen.len() <= cap, "{} has more than {cap} reachable states", spec.name);
                order.push(n.clone());
                queue.push_back(n);
            }
        }
    }
    order
}

/// Returns the number of (state, action) pairs compared.
fn sweep(rel: &str, seeds: &[u64]) -> usize {
    let spec = level(rel);
    let model = TransitionProgram::parse(spec.family.reference_model()).unwrap();
    let limits = Limits::default();
    let mut pairs = 0;
    for &seed in seeds {
        for s in reachable(&spec, seed, 200_000) {
            for a in spec.action_space() {
                let expected = true_transition(&spec, &s, a);
                let got = run_transition(&model, &s, a, &limits)
                    .unwrap_or_else(|e| panic!("{rel}: {e} on action {a} from\n{}", s.serialize()));
                assert_eq!(got, expected, "{rel}: action {a} from\n{}", s.serialize());
                pairs += 1;
            }
        }
    }
    pairs
}

#[test]
fn babyai_unlock_exhaustive() {
    let n = sweep("babyai/unlock_6x6.lvl", &[0]);
    assert!(n > 100, "only {n} pairs");
}

#[test]
fn babyai_boss_exhaustive() {
    sweep("babyai/boss_1.lvl", &[1]);
}

#[test]
fn maze_family_exhaustive() {
    sweep("labyrinth/labyrinth_1.lvl", &[0]);
    sweep("maze/maze_1.lvl", &[0]);
    sweep("maze/trap_maze.lvl", &[0]);
}

#[test]
fn sokoban_exhaustive() {
    let n = sweep("sokoban/sokoban_1.lvl", &[0]);
    assert!(n > 1000, "only {n} pairs");
}

#[test]
fn minihack_exhaustive() {
    sweep("minihack/nav_1.lvl", &[0]);
    sweep("minihack/wod_1.lvl", &[0]);
}

#[test]
fn babyai_toggle_opens_locked_door_in_place() {
    let model = TransitionProgram::parse(tbrl::envs::Family::Babyai.reference_model()).unwrap();
    let mut s = RawState::new();
    s.set("red_agent", ObjectValue::Positions(vec![Pos::new(2, 2)]));
    s.set("agent_direction", ObjectValue::Scalar(Pos::new(1, 0)));
    s.set("agent_carrying", ObjectValue::Names(vec!["blue_key".into()]));
    s.set("locked_blue_door", ObjectValue::Positions(vec![Pos::new(3, 2)]));
    let out = run_transition(&model, &s, &Action::new("toggle"), &Limits::default()).unwrap();
    assert!(!out.contains("locked_blue_door"));
    assert_eq!(out.positions("open_blue_door"), [Pos::new(3, 2)]);
    assert_eq!(out.names("agent_carrying"), ["blue_key".to_string()]);
    assert_eq!(out.positions("red_agent"), [Pos::new(2, 2)]);
}

#[test]
fn maze_model_forward_into_wall_is_noop() {
    let spec = tbrl::envs::parse_level(
        "@family: maze\n@width: 3\n@height: 3\navatar: [[1,1]]\nwall: [[2,1]]\ngoal: [[1,2]]\n",
    )
    .unwrap();
    let model = TransitionProgram::parse(spec.family.reference_model()).unwrap();
    let s = reset(&spec, 0).unwrap().raw;
    let a = Action::new("right");
    let got = run_transition(&model, &s, &a, &Limits::default()).unwrap();
    assert_eq!(got, true_transition(&spec, &s, &a));
    assert_eq!(got, s);
}
